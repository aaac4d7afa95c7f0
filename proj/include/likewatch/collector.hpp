#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "likewatch/api_client.hpp"
#include "likewatch/timeutil.hpp"
#include "likewatch/vendor_json.hpp"

namespace lw::collect {

using api::ApiClient;
using api::Id;
using api::TweetRecord;

struct CollectorParams {
  std::string keyword;
  std::vector<std::string> tokens;
  Time startpoint = 0;
  std::int64_t observationtime = 0;  // seconds
  std::int64_t tracktime = 0;        // seconds
  std::int64_t pullinterval = 300;   // seconds
  std::int64_t min_delta = 3;        // >= 1
  std::int64_t top_n = 36;
  std::int64_t min_likes = 10;       // final-harvest threshold
  int req_rate_lim = 75;
  bool collect_retweeters = false;
  bool allow_unsafe = false;  // permit top_n above the safe capacity bound

  Time endpoint() const { return startpoint + observationtime + tracktime; }
  std::int64_t safe_top_n_max() const {
    return req_rate_lim * pullinterval / kWindowSeconds *
           static_cast<std::int64_t>(tokens.size());
  }

  void validate() const;
  static CollectorParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // tokens replaced by fingerprints
};

struct LogEntry {
  Time created_at = 0;
  std::int64_t like_count = 0;
  std::int64_t like_count_last = 0;
  std::int64_t retweet_count = 0;
  std::int64_t retweet_count_last = 0;

  std::int64_t delta() const { return like_count - like_count_last; }
  std::int64_t retweet_delta() const { return retweet_count - retweet_count_last; }
};

using Log = std::map<Id, LogEntry>;

struct LikerRow {
  Id tweet_id = 0;
  std::vector<Id> liker_ids;
  Time pulled_at = 0;
};

struct PullSnapshot {
  Time t = 0;
  std::vector<TweetRecord> tweets;   // T_t
  std::vector<LikerRow> likers;      // L_t
  std::vector<LikerRow> retweeters;  // only with collect_retweeters
};

struct CollectorState {
  Log log;
  std::int64_t pulls_completed = 0;
  std::size_t next_token_index = 0;
};

// New tweets are appended with like_count_last = 0; existing ones get their
// counts refreshed. Duplicate ids inside one batch: last occurrence wins.
void update_log_1(Log& log, const std::vector<TweetRecord>& tweets);

// Entries with delta >= min_delta, sorted delta descending, ties
// older-tweet-first (created_at, then id).
std::vector<std::pair<Id, std::int64_t>> find_candidates(const Log& log,
                                                         std::int64_t min_delta);
std::vector<std::pair<Id, std::int64_t>> find_retweet_candidates(const Log& log,
                                                                 std::int64_t min_delta);

struct BudgetReport {
  double tweet_retrievals_total = 0;
  std::int64_t likers_requests_per_window_peak = 0;
  std::int64_t safe_top_n_max = 0;
  bool monthly_cap_ok = false;
  bool rate_ok = false;
};

BudgetReport plan_budget(double expected_tweets_per_day, const CollectorParams& params);

// Runs the pull loop plus final harvest against an API client, persisting
// into out_dir (tweets_<t>.jsonl, likers_<t>.jsonl, log.json, manifest.json,
// likers_final.jsonl). Restartable: an interrupted run resumes from the
// persisted log at the first unexecuted pullpoint.
class Collector {
 public:
  Collector(CollectorParams params, ApiClient& client, std::filesystem::path out_dir,
            bool virtual_clock = true);

  // Executes one pull at pullpoint t and persists its outputs.
  PullSnapshot pull_once(Time t);

  // All remaining pullpoints, then the final harvest.
  // crash_after_pulls > 0 stops after that many completed pulls in total
  // (test hook standing in for a process kill).
  void run(std::int64_t crash_after_pulls = 0);

  void final_harvest();

  const CollectorState& state() const { return state_; }
  const CollectorParams& params() const { return params_; }

  std::string next_token();  // round-robin, one advance per pull

 private:
  void load_or_init_state();
  void persist_state();
  void write_manifest(bool completed);
  std::vector<TweetRecord> fetch_window(Time start, Time end, const std::string& token);
  void ensure_clock_at(Time t);

  CollectorParams params_;
  ApiClient& client_;
  std::filesystem::path dir_;
  bool virtual_clock_;
  CollectorState state_;
};

}  // namespace lw::collect
