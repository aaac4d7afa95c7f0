#include "likewatch/collector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"

namespace lw::collect {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------ params

void CollectorParams::validate() const {
  if (keyword.empty()) throw ConfigError("keyword must not be empty");
  if (tokens.empty()) throw ConfigError("at least one bearer token required");
  if (pullinterval <= 0) throw ConfigError("pullinterval must be > 0");
  if (tracktime <= 0) throw ConfigError("tracktime must be > 0");
  if (observationtime < 0) throw ConfigError("observationtime must be >= 0");
  if (min_delta < 1) throw ConfigError("min_delta must be >= 1");
  if (top_n < 1) throw ConfigError("top_n must be >= 1");
  if (min_likes < 0) throw ConfigError("min_likes must be >= 0");
  if (req_rate_lim < 1) throw ConfigError("req_rate_lim must be >= 1");
  if (!allow_unsafe && top_n > safe_top_n_max())
    throw ConfigError("top_n " + std::to_string(top_n) + " exceeds safe capacity " +
                      std::to_string(safe_top_n_max()) +
                      " (req_rate_lim * pullinterval/900 * |tokens|); set allow_unsafe to "
                      "override");
}

CollectorParams CollectorParams::from_json(const json& j) {
  CollectorParams p;
  p.keyword = j.at("keyword").get<std::string>();
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  p.startpoint = j.at("startpoint").get<Time>();
  p.observationtime = j.at("observationtime").get<std::int64_t>();
  p.tracktime = j.at("tracktime").get<std::int64_t>();
  p.pullinterval = j.value("pullinterval", p.pullinterval);
  p.min_delta = j.value("min_delta", p.min_delta);
  p.top_n = j.value("top_n", p.top_n);
  p.min_likes = j.value("min_likes", p.min_likes);
  p.req_rate_lim = j.value("req_rate_lim", p.req_rate_lim);
  p.collect_retweeters = j.value("collect_retweeters", p.collect_retweeters);
  p.allow_unsafe = j.value("allow_unsafe", p.allow_unsafe);
  return p;
}

json CollectorParams::to_json() const {
  json j;
  j["keyword"] = keyword;
  json fps = json::array();
  for (const auto& t : tokens) fps.push_back(fingerprint(t));
  j["token_fingerprints"] = fps;
  j["token_count"] = tokens.size();
  j["startpoint"] = startpoint;
  j["observationtime"] = observationtime;
  j["tracktime"] = tracktime;
  j["pullinterval"] = pullinterval;
  j["min_delta"] = min_delta;
  j["top_n"] = top_n;
  j["min_likes"] = min_likes;
  j["req_rate_lim"] = req_rate_lim;
  j["collect_retweeters"] = collect_retweeters;
  j["allow_unsafe"] = allow_unsafe;
  return j;
}

// --------------------------------------------------------------------- log

void update_log_1(Log& log, const std::vector<TweetRecord>& tweets) {
  for (const TweetRecord& t : tweets) {
    auto it = log.find(t.id);
    if (it == log.end()) {
      LogEntry e;
      e.created_at = t.created_at;
      e.like_count = static_cast<std::int64_t>(t.like_count);
      e.like_count_last = 0;
      e.retweet_count = static_cast<std::int64_t>(t.retweet_count);
      e.retweet_count_last = 0;
      log.emplace(t.id, e);
    } else {
      it->second.like_count = static_cast<std::int64_t>(t.like_count);
      it->second.retweet_count = static_cast<std::int64_t>(t.retweet_count);
    }
  }
}

namespace {

template <typename DeltaFn>
std::vector<std::pair<Id, std::int64_t>> candidates_by(const Log& log,
                                                       std::int64_t min_delta,
                                                       DeltaFn delta) {
  std::vector<std::pair<Id, std::int64_t>> out;
  for (const auto& [id, e] : log)
    if (delta(e) >= min_delta) out.emplace_back(id, delta(e));
  std::sort(out.begin(), out.end(),
            [&](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              const LogEntry& ea = log.at(a.first);
              const LogEntry& eb = log.at(b.first);
              return std::tie(ea.created_at, a.first) < std::tie(eb.created_at, b.first);
            });
  return out;
}

}  // namespace

std::vector<std::pair<Id, std::int64_t>> find_candidates(const Log& log,
                                                         std::int64_t min_delta) {
  return candidates_by(log, min_delta, [](const LogEntry& e) { return e.delta(); });
}

std::vector<std::pair<Id, std::int64_t>> find_retweet_candidates(const Log& log,
                                                                 std::int64_t min_delta) {
  return candidates_by(log, min_delta, [](const LogEntry& e) { return e.retweet_delta(); });
}

// ------------------------------------------------------------------ budget

BudgetReport plan_budget(double expected_tweets_per_day, const CollectorParams& params) {
  if (expected_tweets_per_day <= 0) throw ConfigError("expected_tweets_per_day must be > 0");
  BudgetReport r;
  // Every tweet is retrieved once per pull while tracked, i.e. about
  // tracktime/pullinterval times over its life.
  double observation_days = static_cast<double>(params.observationtime) / 86400.0;
  double retrievals_per_tweet =
      static_cast<double>(params.tracktime) / static_cast<double>(params.pullinterval);
  r.tweet_retrievals_total = expected_tweets_per_day * observation_days * retrievals_per_tweet;
  r.safe_top_n_max = params.safe_top_n_max();
  std::int64_t pulls_per_window =
      (kWindowSeconds + params.pullinterval - 1) / params.pullinterval;
  r.likers_requests_per_window_peak = params.top_n * std::max<std::int64_t>(1, pulls_per_window);
  r.monthly_cap_ok = r.tweet_retrievals_total <= 10'000'000.0;
  r.rate_ok = params.top_n <= r.safe_top_n_max;
  return r;
}

// --------------------------------------------------------------- collector

namespace {

std::string tweets_jsonl(const std::vector<TweetRecord>& tweets) {
  std::string out;
  for (const TweetRecord& t : tweets) {
    json j;
    j["id"] = t.id;
    j["created_at"] = t.created_at;
    j["author_id"] = t.author_id;
    j["text"] = t.text;
    j["like_count"] = t.like_count;
    j["retweet_count"] = t.retweet_count;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string likers_jsonl(const std::vector<LikerRow>& rows) {
  std::string out;
  for (const LikerRow& r : rows) {
    json j;
    j["tweet_id"] = r.tweet_id;
    j["liker_ids"] = r.liker_ids;
    j["pulled_at"] = r.pulled_at;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

Collector::Collector(CollectorParams params, ApiClient& client, fs::path out_dir,
                     bool virtual_clock)
    : params_(std::move(params)),
      client_(client),
      dir_(std::move(out_dir)),
      virtual_clock_(virtual_clock) {
  params_.validate();
  fs::create_directories(dir_);
  load_or_init_state();
}

void Collector::load_or_init_state() {
  fs::path log_path = dir_ / "log.json";
  if (!fs::exists(log_path)) return;  // start empty
  json j = json::parse(read_file(log_path));
  if (j.value("schema_version", 0) != 1)
    throw ConfigError("unsupported log schema version: " + log_path.string());
  state_.pulls_completed = j.at("pulls_completed").get<std::int64_t>();
  state_.next_token_index = j.at("next_token_index").get<std::size_t>();
  for (auto& [id_str, ej] : j.at("entries").items()) {
    LogEntry e;
    e.created_at = ej.at("created_at").get<Time>();
    e.like_count = ej.at("like_count").get<std::int64_t>();
    e.like_count_last = ej.at("like_count_last").get<std::int64_t>();
    e.retweet_count = ej.value("retweet_count", std::int64_t{0});
    e.retweet_count_last = ej.value("retweet_count_last", std::int64_t{0});
    state_.log.emplace(std::stoull(id_str), e);
  }
}

void Collector::persist_state() {
  json entries = json::object();
  for (const auto& [id, e] : state_.log) {
    json ej;
    ej["created_at"] = e.created_at;
    ej["like_count"] = e.like_count;
    ej["like_count_last"] = e.like_count_last;
    ej["retweet_count"] = e.retweet_count;
    ej["retweet_count_last"] = e.retweet_count_last;
    entries[std::to_string(id)] = ej;
  }
  json j;
  j["schema_version"] = 1;
  j["pulls_completed"] = state_.pulls_completed;
  j["next_token_index"] = state_.next_token_index;
  j["entries"] = entries;
  atomic_write(dir_ / "log.json", j.dump() + "\n");
}

void Collector::write_manifest(bool completed) {
  json j;
  j["schema_version"] = 1;
  j["params"] = params_.to_json();
  j["pull_count"] = state_.pulls_completed;
  j["completed"] = completed;
  atomic_write(dir_ / "manifest.json", j.dump(2) + "\n");
}

std::string Collector::next_token() {
  std::string tok = params_.tokens[state_.next_token_index % params_.tokens.size()];
  state_.next_token_index = (state_.next_token_index + 1) % params_.tokens.size();
  return tok;
}

std::vector<TweetRecord> Collector::fetch_window(Time start, Time end,
                                                 const std::string& token) {
  std::vector<TweetRecord> all;
  if (start >= end) return all;
  std::string page_token;
  while (true) {
    api::SearchPage page = client_.search(params_.keyword, start, end, page_token, token);
    for (auto& t : page.tweets) all.push_back(std::move(t));
    if (!page.next_token) break;
    page_token = *page.next_token;
  }
  return all;
}

void Collector::ensure_clock_at(Time t) {
  Time now = client_.now();
  if (now >= t) return;
  if (virtual_clock_) {
    client_.advance_clock(t - now);
  } else {
    std::this_thread::sleep_for(std::chrono::seconds(t - now));
  }
}

PullSnapshot Collector::pull_once(Time t) {
  PullSnapshot snap;
  snap.t = t;
  std::string token = next_token();

  Time start = std::max(params_.startpoint, t - params_.tracktime);
  Time end = std::min(t, params_.startpoint + params_.observationtime);

  bool aborted = false;
  std::int64_t reset = 0;
  try {
    snap.tweets = fetch_window(start, end, token);
    if (!snap.tweets.empty())
      atomic_write(dir_ / ("tweets_" + std::to_string(t) + ".jsonl"),
                   tweets_jsonl(snap.tweets));
    update_log_1(state_.log, snap.tweets);

    auto candidates = find_candidates(state_.log, params_.min_delta);
    if (static_cast<std::int64_t>(candidates.size()) > params_.top_n)
      candidates.resize(static_cast<std::size_t>(params_.top_n));
    for (const auto& [id, delta] : candidates) {
      LikerRow row;
      row.tweet_id = id;
      row.liker_ids = client_.liking_users(id, token);
      row.pulled_at = client_.now();
      snap.likers.push_back(std::move(row));
      // update_log_2: mark this tweet's likers as pulled at its current count
      LogEntry& e = state_.log.at(id);
      e.like_count_last = e.like_count;
    }

    if (params_.collect_retweeters) {
      auto rcands = find_retweet_candidates(state_.log, params_.min_delta);
      if (static_cast<std::int64_t>(rcands.size()) > params_.top_n)
        rcands.resize(static_cast<std::size_t>(params_.top_n));
      for (const auto& [id, delta] : rcands) {
        LikerRow row;
        row.tweet_id = id;
        row.liker_ids = client_.retweeted_by(id, token);
        row.pulled_at = client_.now();
        snap.retweeters.push_back(std::move(row));
        LogEntry& e = state_.log.at(id);
        e.retweet_count_last = e.retweet_count;
      }
    }
  } catch (const RateLimitedError& e) {
    aborted = true;
    reset = e.reset_epoch_seconds;
  } catch (const ResumableError& e) {
    aborted = true;
    reset = e.reset_epoch_seconds;
  }

  // persist whatever this pull produced, even on abort
  if (!snap.likers.empty())
    atomic_write(dir_ / ("likers_" + std::to_string(t) + ".jsonl"),
                 likers_jsonl(snap.likers));
  if (!snap.retweeters.empty())
    atomic_write(dir_ / ("retweeters_" + std::to_string(t) + ".jsonl"),
                 likers_jsonl(snap.retweeters));
  if (aborted) {
    persist_state();
    throw ResumableError("pull at " + std::to_string(t) + " aborted; resumable", reset);
  }
  state_.pulls_completed += 1;
  persist_state();
  return snap;
}

void Collector::run(std::int64_t crash_after_pulls) {
  write_manifest(false);

  const Time endpoint = params_.endpoint();
  while (true) {
    Time t = params_.startpoint + state_.pulls_completed * params_.pullinterval;
    if (t > endpoint) break;
    // downtime past a pullpoint: skip it rather than replay it
    Time now = client_.now();
    if (now > t && now - t >= params_.pullinterval) {
      std::int64_t k = (now - params_.startpoint) / params_.pullinterval;
      state_.pulls_completed = std::max(state_.pulls_completed, k);
      continue;
    }
    if (crash_after_pulls > 0 && state_.pulls_completed >= crash_after_pulls)
      throw ResumableError("stopped after " + std::to_string(state_.pulls_completed) +
                           " pulls (crash hook)");
    ensure_clock_at(t);
    try {
      pull_once(t);
    } catch (const ResumableError& e) {
      if (!virtual_clock_ || e.reset_epoch_seconds <= 0) throw;
      // wait out the window, then skip to the next pullpoint (missed
      // pullpoints are not replayed)
      ensure_clock_at(e.reset_epoch_seconds);
      Time now = client_.now();
      std::int64_t k = (now - params_.startpoint + params_.pullinterval - 1) /
                       params_.pullinterval;
      state_.pulls_completed = std::max(state_.pulls_completed, k);
      persist_state();
    }
  }
  final_harvest();
}

void Collector::final_harvest() {
  // Alg. 2: merge all T_t keeping the highest like_count per tweet, filter by
  // min_likes, then request likers in rate-limit sized batches.
  std::map<Id, std::int64_t> merged;
  for (const fs::path& p : list_files(dir_, "tweets_", ".jsonl")) {
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      Id id = j.at("id").get<Id>();
      std::int64_t likes = j.at("like_count").get<std::int64_t>();
      auto it = merged.find(id);
      if (it == merged.end() || likes > it->second) merged[id] = likes;
    }
  }

  std::vector<Id> eligible;
  for (const auto& [id, likes] : merged)
    if (likes >= params_.min_likes) eligible.push_back(id);

  // start in a fresh rate window so the batch arithmetic holds
  if (virtual_clock_ && !eligible.empty())
    client_.advance_clock(window_end(client_.now()) - client_.now());

  const std::int64_t batch = params_.req_rate_lim *
                             static_cast<std::int64_t>(params_.tokens.size());
  std::vector<LikerRow> rows;
  std::int64_t counter = 0;
  std::size_t token_cursor = 0;
  for (Id id : eligible) {
    std::string token = params_.tokens[token_cursor % params_.tokens.size()];
    ++token_cursor;
    LikerRow row;
    row.tweet_id = id;
    try {
      row.liker_ids = client_.liking_users(id, token);
    } catch (const RateLimitedError& e) {
      // pacing should prevent this; sleep to the reset and retry once
      if (virtual_clock_)
        client_.advance_clock(std::max<Time>(0, e.reset_epoch_seconds - client_.now()));
      else
        std::this_thread::sleep_for(
            std::chrono::seconds(std::max<Time>(0, e.reset_epoch_seconds - client_.now())));
      row.liker_ids = client_.liking_users(id, token);
    }
    row.pulled_at = client_.now();
    rows.push_back(std::move(row));
    ++counter;
    if (counter >= batch) {
      counter = 0;
      if (virtual_clock_)
        client_.advance_clock(kWindowSeconds);
      else
        std::this_thread::sleep_for(std::chrono::seconds(kWindowSeconds));
    }
  }
  atomic_write(dir_ / "likers_final.jsonl", likers_jsonl(rows));
  write_manifest(true);
}

}  // namespace lw::collect
