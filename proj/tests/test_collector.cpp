#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <random>
#include <set>

#include "likewatch/api_client.hpp"
#include "likewatch/collector.hpp"
#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"
#include "likewatch/vendor_json.hpp"
#include "likewatch/world.hpp"

using namespace lw;
using namespace lw::collect;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("lw_collect_" + tag);
  fs::remove_all(p);
  return p;
}

LogEntry entry(Time created, std::int64_t count, std::int64_t last) {
  LogEntry e;
  e.created_at = created;
  e.like_count = count;
  e.like_count_last = last;
  return e;
}

TweetRecord tweet(Id id, Time created, std::uint64_t likes) {
  TweetRecord t;
  t.id = id;
  t.created_at = created;
  t.author_id = id + 1;
  t.text = "t";
  t.like_count = likes;
  return t;
}

CollectorParams params_for(std::vector<std::string> tokens, Time start) {
  CollectorParams p;
  p.keyword = "#tag";
  p.tokens = std::move(tokens);
  p.startpoint = start;
  p.observationtime = 3600;
  p.tracktime = 3600;
  p.pullinterval = 900;
  p.min_delta = 1;
  p.top_n = 10;
  p.min_likes = 1;
  return p;
}

}  // namespace

TEST_CASE("update_log_1: new tweets enter with last = 0, existing refresh counts") {
  Log log;
  update_log_1(log, {tweet(1, 100, 7)});
  CHECK(log.at(1).like_count == 7);
  CHECK(log.at(1).like_count_last == 0);
  CHECK(log.at(1).delta() == 7);

  log.at(1).like_count_last = 7;
  update_log_1(log, {tweet(1, 100, 9), tweet(2, 50, 3)});
  CHECK(log.at(1).delta() == 2);
  CHECK(log.at(2).delta() == 3);
  // duplicate ids inside one batch: last occurrence wins
  update_log_1(log, {tweet(2, 50, 4), tweet(2, 50, 6)});
  CHECK(log.at(2).like_count == 6);
}

TEST_CASE("find_candidates: worked example with threshold and ordering") {
  // A gained 7, B gained 5, C gained 2; min_delta = 3 keeps A, B.
  Log log;
  log[101] = entry(1000, 17, 10);  // A: delta 7
  log[102] = entry(2000, 8, 3);    // B: delta 5
  log[103] = entry(1500, 9, 7);    // C: delta 2
  auto c = find_candidates(log, 3);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == std::make_pair(Id{101}, std::int64_t{7}));
  CHECK(c[1] == std::make_pair(Id{102}, std::int64_t{5}));
  CHECK(find_candidates(log, 8).empty());

  // ties break toward the older tweet, then the smaller id
  Log tie;
  tie[7] = entry(500, 5, 0);
  tie[5] = entry(300, 5, 0);
  tie[6] = entry(300, 5, 0);
  auto t = find_candidates(tie, 1);
  REQUIRE(t.size() == 3);
  CHECK(t[0].first == 5);
  CHECK(t[1].first == 6);
  CHECK(t[2].first == 7);
}

TEST_CASE("find_candidates agrees with a naive reference on random logs") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 20; ++round) {
    Log log;
    std::uniform_int_distribution<std::int64_t> cnt(0, 30);
    std::uniform_int_distribution<Time> created(0, 5000);
    for (Id id = 1; id <= 1000; ++id) {
      std::int64_t last = cnt(rng);
      log[id] = entry(created(rng), last + cnt(rng) - 15, last);
    }
    std::int64_t min_delta = 1 + static_cast<std::int64_t>(rng() % 5);

    // reference: filter then stable-sort by the documented key
    std::vector<std::pair<Id, std::int64_t>> ref;
    for (const auto& [id, e] : log)
      if (e.delta() >= min_delta) ref.emplace_back(id, e.delta());
    std::sort(ref.begin(), ref.end(), [&](const auto& a, const auto& b) {
      const auto& ea = log.at(a.first);
      const auto& eb = log.at(b.first);
      return std::make_tuple(-a.second, ea.created_at, a.first) <
             std::make_tuple(-b.second, eb.created_at, b.first);
    });
    CHECK(find_candidates(log, min_delta) == ref);
  }
}

TEST_CASE("parameter validation enforces the safe capacity bound") {
  auto p = params_for({"a"}, 0);
  p.pullinterval = 900;
  p.top_n = 75;
  CHECK_NOTHROW(p.validate());
  p.top_n = 76;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.allow_unsafe = true;
  CHECK_NOTHROW(p.validate());

  p = params_for({"a", "b"}, 0);
  p.top_n = 150;
  CHECK_NOTHROW(p.validate());  // two tokens double the capacity

  p = params_for({"a"}, 0);
  p.pullinterval = 12;
  p.top_n = 1;
  CHECK_NOTHROW(p.validate());
  p.top_n = 2;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("plan_budget reproduces the capacity extremes and scales retrievals") {
  auto p = params_for({"a"}, 0);
  p.pullinterval = 12;
  p.top_n = 1;
  CHECK(plan_budget(100, p).safe_top_n_max == 1);

  p.pullinterval = 900;
  p.top_n = 75;
  auto r = plan_budget(100, p);
  CHECK(r.safe_top_n_max == 75);
  CHECK(r.rate_ok);

  // 100 tweets/day, 1 day observation, tracktime/pullinterval = 4 retrievals
  CHECK(p.observationtime == 3600);
  p.observationtime = 86400;
  p.tracktime = 3600;
  p.pullinterval = 900;
  r = plan_budget(100, p);
  CHECK(r.tweet_retrievals_total == doctest::Approx(100.0 * 1.0 * 4.0));
  CHECK(r.monthly_cap_ok);

  // production-scale: 1500 tweets/day, 30 days, 48h track, 5-min pulls
  p.observationtime = 30 * 86400;
  p.tracktime = 48 * 3600;
  p.pullinterval = 300;
  p.top_n = 36;
  p.tokens = {"a", "b"};
  r = plan_budget(1500, p);
  CHECK(r.tweet_retrievals_total == doctest::Approx(1500.0 * 30 * 576));
  CHECK(!r.monthly_cap_ok);  // 25.9M would exceed the cap; budget says so
  CHECK(r.safe_top_n_max == 50);
  CHECK(r.likers_requests_per_window_peak == 36 * 3);
}

namespace {

// scripted world used by the end-to-end collector tests
world::WorldTimeline pull_world(Time epoch) {
  world::WorldTimeline w;
  w.config.epoch = epoch;
  w.config.duration_seconds = 7200;
  w.config.query_tag = "#tag";
  auto mk_tweet = [&](world::Id id, Time at) {
    world::Tweet t;
    t.id = id;
    t.created_at = at;
    t.author_id = id + 1000;
    t.text = "x #tag";
    t.tags = {"#tag"};
    w.tweets.push_back(t);
  };
  mk_tweet(21, epoch + 30);
  mk_tweet(22, epoch + 60);
  auto like = [&](Time ts, world::Id user, world::Id tw) {
    world::Event e;
    e.ts = ts;
    e.user_id = user;
    e.tweet_id = tw;
    e.kind = world::EventKind::like;
    w.events.push_back(e);
  };
  // tweet 21: 3 likes in the first interval, 1 more later
  like(epoch + 100, 601, 21);
  like(epoch + 200, 602, 21);
  like(epoch + 300, 603, 21);
  like(epoch + 1000, 604, 21);
  // tweet 22: 1 like in the first interval
  like(epoch + 400, 605, 22);
  std::sort(w.events.begin(), w.events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.ts, a.user_id, a.tweet_id) < std::tie(b.ts, b.user_id, b.tweet_id);
  });
  return w;
}

struct Rig {
  std::shared_ptr<api::SimServerCore> core;
  std::unique_ptr<api::LocalApiClient> client;

  Rig(world::WorldTimeline w, std::vector<std::string> tokens, Time start, int rate = 75) {
    api::ServerConfig conf;
    conf.tokens = std::move(tokens);
    conf.rate_limit = rate;
    core = std::make_shared<api::SimServerCore>(std::move(w), conf, start);
    client = std::make_unique<api::LocalApiClient>(core);
  }
};

}  // namespace

TEST_CASE("pull loop: deltas drive liker requests; min_delta filters") {
  const Time epoch = 1653480000;
  Rig rig(pull_world(epoch), {"a"}, epoch);
  auto p = params_for({"a"}, epoch);
  p.min_delta = 2;
  p.top_n = 5;

  fs::path dir = temp_dir("pull");
  Collector col(p, *rig.client, dir);

  rig.client->advance_clock(900);
  auto s1 = col.pull_once(epoch + 900);
  REQUIRE(s1.tweets.size() == 2);
  // only tweet 21 has delta >= 2 (3 vs 1)
  REQUIRE(s1.likers.size() == 1);
  CHECK(s1.likers[0].tweet_id == 21);
  CHECK(s1.likers[0].liker_ids == std::vector<Id>{603, 602, 601});

  rig.client->advance_clock(900);
  auto s2 = col.pull_once(epoch + 1800);
  // tweet 21 gained 1 since its likers were pulled; tweet 22 still has
  // delta 1 against last=0 — neither reaches min_delta 2
  CHECK(s2.likers.empty());

  // files written for non-empty outputs only
  CHECK(fs::exists(dir / ("tweets_" + std::to_string(epoch + 900) + ".jsonl")));
  CHECK(fs::exists(dir / ("likers_" + std::to_string(epoch + 900) + ".jsonl")));
  CHECK(!fs::exists(dir / ("likers_" + std::to_string(epoch + 1800) + ".jsonl")));
}

TEST_CASE("top_n truncation requests only the strongest deltas") {
  const Time epoch = 1653480000;
  auto w = pull_world(epoch);
  Rig rig(w, {"a"}, epoch);
  auto p = params_for({"a"}, epoch);
  p.min_delta = 1;
  p.top_n = 1;

  Collector col(p, *rig.client, temp_dir("topn"));
  rig.client->advance_clock(900);
  auto s = col.pull_once(epoch + 900);
  REQUIRE(s.likers.size() == 1);
  CHECK(s.likers[0].tweet_id == 21);  // delta 3 beats delta 1
}

TEST_CASE("tokens rotate round-robin, one advance per pull") {
  const Time epoch = 1653480000;
  Rig rig(pull_world(epoch), {"a", "b", "c"}, epoch);
  auto p = params_for({"a", "b", "c"}, epoch);
  Collector col(p, *rig.client, temp_dir("rr"));
  CHECK(col.next_token() == "a");
  CHECK(col.next_token() == "b");
  CHECK(col.next_token() == "c");
  CHECK(col.next_token() == "a");
}

TEST_CASE("full run: recall of every like event and rate compliance in the audit") {
  const Time epoch = 1653480000;
  Rig rig(pull_world(epoch), {"a"}, epoch);
  auto p = params_for({"a"}, epoch);

  fs::path dir = temp_dir("run");
  Collector col(p, *rig.client, dir);
  col.run();

  json manifest = json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("completed") == true);
  CHECK(!manifest["params"].contains("tokens"));  // raw secrets never persisted
  CHECK(manifest["params"]["token_fingerprints"].size() == 1);

  // every like event is collected somewhere
  std::set<std::pair<Id, Id>> collected;
  for (const auto& f : list_files(dir, "likers_", ".jsonl")) {
    std::istringstream in(read_file(f));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      for (const auto& u : j.at("liker_ids"))
        collected.insert({j.at("tweet_id").get<Id>(), u.get<Id>()});
    }
  }
  for (const auto& e : rig.core->world().events)
    CHECK(collected.count({e.tweet_id, e.user_id}));

  // audit: never more than 75 liking requests per token per window, no 429s
  std::map<std::pair<std::string, std::int64_t>, int> per_window;
  for (const auto& r : rig.core->export_audit()) {
    CHECK(r.outcome != "rate_limited");
    if (r.endpoint == "liking_users") per_window[{r.token, window_index(r.ts)}]++;
  }
  for (const auto& [k, n] : per_window) CHECK(n <= 75);
}

TEST_CASE("final harvest paces batches of req_rate_lim x tokens per window") {
  // 8 tweets, rate limit 3, one token -> batches of 3/3/2 across 3 windows
  const Time epoch = 1653480000;
  world::WorldTimeline w;
  w.config.epoch = epoch;
  w.config.duration_seconds = 7200;
  for (int i = 0; i < 8; ++i) {
    world::Tweet t;
    t.id = 31 + i;
    t.created_at = epoch + 10 + i;
    t.author_id = 1;
    t.text = "x #tag";
    t.tags = {"#tag"};
    w.tweets.push_back(t);
    world::Event e;
    e.ts = epoch + 100 + i;
    e.user_id = 700 + i;
    e.tweet_id = t.id;
    e.kind = world::EventKind::like;
    w.events.push_back(e);
  }

  Rig rig(w, {"a"}, epoch, /*rate=*/3);
  auto p = params_for({"a"}, epoch);
  p.req_rate_lim = 3;
  p.top_n = 3;
  p.min_delta = 1000;  // pulls never request likers; harvest does all the work
  fs::path dir = temp_dir("harvest");
  Collector col(p, *rig.client, dir);
  col.run();

  std::map<std::int64_t, int> per_window;
  for (const auto& r : rig.core->export_audit()) {
    CHECK(r.outcome != "rate_limited");
    if (r.endpoint == "liking_users") per_window[window_index(r.ts)]++;
  }
  REQUIRE(per_window.size() == 3);
  std::vector<int> counts;
  for (auto& [w_, n] : per_window) counts.push_back(n);
  CHECK(counts == std::vector<int>{3, 3, 2});

  // all 8 tweets harvested
  std::istringstream in(read_file(dir / "likers_final.jsonl"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 8);
}

TEST_CASE("interrupting a run and restarting resumes without replaying pulls") {
  const Time epoch = 1653480000;
  auto p = params_for({"a"}, epoch);

  // uninterrupted reference
  Rig ref_rig(pull_world(epoch), {"a"}, epoch);
  fs::path ref = temp_dir("ref");
  Collector(p, *ref_rig.client, ref).run();

  // crash after 2 pulls, then resume with a fresh collector + fresh server
  Rig r1(pull_world(epoch), {"a"}, epoch);
  fs::path dir = temp_dir("resume");
  CHECK_THROWS_AS(Collector(p, *r1.client, dir).run(2), ResumableError);

  Rig r2(pull_world(epoch), {"a"}, epoch);
  r2.client->advance_clock(2 * 900);  // restart happens at the crash-time clock
  Collector(p, *r2.client, dir).run();

  auto files = [&](const fs::path& d) {
    std::vector<std::string> names;
    for (const auto& f : fs::directory_iterator(d)) names.push_back(f.path().filename());
    std::sort(names.begin(), names.end());
    return names;
  };
  REQUIRE(files(ref) == files(dir));
  for (const auto& name : files(ref)) CHECK(read_file(ref / name) == read_file(dir / name));
}

TEST_CASE("rate-limited pull aborts resumably and the loop skips ahead") {
  const Time epoch = 1653480000;
  // many tweets all gaining likes so a tiny rate limit trips mid-pull
  world::WorldTimeline w;
  w.config.epoch = epoch;
  w.config.duration_seconds = 7200;
  for (int i = 0; i < 6; ++i) {
    world::Tweet t;
    t.id = 41 + i;
    t.created_at = epoch + 10 + i;
    t.author_id = 1;
    t.text = "x #tag";
    t.tags = {"#tag"};
    w.tweets.push_back(t);
    world::Event e;
    e.ts = epoch + 100 + i;
    e.user_id = 800 + i;
    e.tweet_id = t.id;
    e.kind = world::EventKind::like;
    w.events.push_back(e);
  }

  Rig rig(w, {"a"}, epoch, /*rate=*/2);
  auto p = params_for({"a"}, epoch);
  p.req_rate_lim = 2;
  p.top_n = 2;
  p.allow_unsafe = true;
  p.top_n = 6;  // deliberately above capacity to provoke the 429
  fs::path dir = temp_dir("limited");
  Collector col(p, *rig.client, dir);
  col.run();  // must terminate despite mid-run 429s

  json manifest = json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest.at("completed") == true);
  bool saw_429 = false;
  for (const auto& r : rig.core->export_audit())
    if (r.outcome == "rate_limited") saw_429 = true;
  CHECK(saw_429);
}
