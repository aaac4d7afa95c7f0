#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "likewatch/timeutil.hpp"

using namespace lw;

TEST_CASE("rate windows are 900s multiples from the unix epoch") {
  CHECK(window_index(0) == 0);
  CHECK(window_index(899) == 0);
  CHECK(window_index(900) == 1);
  CHECK(window_index(1653480000) == 1653480000 / 900);
  CHECK(window_end(0) == 900);
  CHECK(window_end(899) == 900);
  CHECK(window_end(900) == 1800);
  CHECK(window_end(1653480001) == 1653480900);
}

TEST_CASE("month arithmetic against known civil dates") {
  // 2022-05-25T12:00:00Z
  Time may25 = 1653480000;
  // 2022-06-01T00:00:00Z and 2022-07-01T00:00:00Z, independently computed
  Time jun1 = 1654041600;
  Time jul1 = 1656633600;

  CHECK(next_month_start(may25) == jun1);
  CHECK(next_month_start(jun1 - 1) == jun1);
  CHECK(next_month_start(jun1) == jul1);
  CHECK(month_index(jun1 - 1) != month_index(jun1));
  CHECK(month_index(may25) == month_index(jun1 - 1));

  // year boundary: 2022-12-31T23:59:59Z -> 2023-01-01T00:00:00Z
  Time dec31 = 1672531199;
  CHECK(next_month_start(dec31) == 1672531200);
  CHECK(month_index(dec31) + 1 == month_index(1672531200));

  // leap February 2024: 2024-02-29T00:00:00Z is still February
  Time feb29 = 1709164800;
  CHECK(month_index(feb29) == month_index(feb29 - 86400));
  CHECK(next_month_start(feb29) == 1709251200);  // 2024-03-01
}

TEST_CASE("rfc3339 round-trips through parse_time") {
  for (Time t : {Time{0}, Time{1653480000}, Time{1672531199}, Time{1709164800}}) {
    std::string s = rfc3339(t);
    CHECK(parse_time(s) == t);
  }
  CHECK(rfc3339(1653480000) == "2022-05-25T12:00:00Z");
}

TEST_CASE("parse_time accepts raw epoch seconds") {
  CHECK(parse_time("0") == 0);
  CHECK(parse_time("1653480000") == 1653480000);
}
