#include "likewatch/timeutil.hpp"

#include <cstdio>
#include <cstdlib>

#include "likewatch/errors.hpp"

namespace lw {

namespace {

// Civil-date conversions on the proleptic Gregorian calendar
// (Howard Hinnant's days_from_civil / civil_from_days).
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

}  // namespace

std::int64_t month_index(Time t) {
  int y;
  unsigned m, d;
  civil_from_days(floor_div(t, 86400), y, m, d);
  return static_cast<std::int64_t>(y) * 12 + (m - 1);
}

Time next_month_start(Time t) {
  int y;
  unsigned m, d;
  civil_from_days(floor_div(t, 86400), y, m, d);
  if (m == 12) {
    y += 1;
    m = 1;
  } else {
    m += 1;
  }
  return days_from_civil(y, m, 1) * 86400;
}

std::string rfc3339(Time t) {
  std::int64_t days = floor_div(t, 86400);
  std::int64_t secs = t - days * 86400;
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

Time parse_time(const std::string& s) {
  if (s.empty()) throw ConfigError("empty timestamp");
  bool digits = true;
  for (size_t i = (s[0] == '-' ? 1 : 0); i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') digits = false;
  if (digits) return std::strtoll(s.c_str(), nullptr, 10);
  int y;
  unsigned m, d, hh, mm, ss;
  if (std::sscanf(s.c_str(), "%d-%u-%uT%u:%u:%u", &y, &m, &d, &hh, &mm, &ss) != 6)
    throw ConfigError("unparseable timestamp: " + s);
  return days_from_civil(y, m, d) * 86400 + hh * 3600 + mm * 60 + ss;
}

}  // namespace lw
