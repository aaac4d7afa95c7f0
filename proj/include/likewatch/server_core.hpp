#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "likewatch/timeutil.hpp"
#include "likewatch/world.hpp"

namespace lw::api {

using world::Id;
using world::WorldTimeline;

enum class Pool { liking_users, retweeted_by, search };

const char* pool_name(Pool p);

struct ServerConfig {
  std::vector<std::string> tokens;  // empty = accept any bearer token
  int rate_limit = 75;              // per (token, pool, 15-min window)
  std::int64_t monthly_tweet_cap = 10'000'000;
  std::optional<int> search_rate_limit;  // default off; stress tests only
  std::uint64_t page_size = 100;
};

struct AuditRecord {
  Time ts = 0;  // virtual
  std::string token;
  std::string endpoint;
  Id tweet_id = 0;  // 0 = none
  std::string outcome;  // ok | rate_limited | not_found
  std::uint64_t items_returned = 0;

  std::string to_line() const;
};

struct TweetRecord {
  Id id = 0;
  Time created_at = 0;
  Id author_id = 0;
  std::string text;
  std::uint64_t like_count = 0;
  std::uint64_t retweet_count = 0;
};

struct SearchPage {
  std::vector<TweetRecord> tweets;
  std::optional<std::string> next_token;
};

// Serves one immutable WorldTimeline under the platform's quotas, on a
// virtual clock. All mutations serialize through one mutex so the audit
// order is total.
class SimServerCore {
 public:
  SimServerCore(WorldTimeline world, ServerConfig config, Time start_clock);

  SearchPage handle_search(const std::string& query, Time start, Time end,
                           const std::string& page_token, const std::string& token);
  std::vector<Id> handle_liking_users(Id tweet_id, const std::string& token);
  std::vector<Id> handle_retweeted_by(Id tweet_id, const std::string& token);

  Time advance_clock(std::int64_t delta_seconds);
  Time get_clock() const;
  void set_clock(Time t);

  const std::map<std::string, std::set<Id>>& export_ground_truth() const;
  std::vector<AuditRecord> export_audit() const;

  // Streams each audit record as a line as it is committed (e.g. to a file).
  void set_audit_sink(std::function<void(const AuditRecord&)> sink);

  const WorldTimeline& world() const { return world_; }
  const ServerConfig& config() const { return config_; }

 private:
  struct WindowCount {
    std::int64_t window = -1;
    int count = 0;
  };
  struct CapCount {
    std::int64_t month = -1;
    std::int64_t count = 0;
  };

  void check_token(const std::string& token) const;
  std::vector<Id> limited_user_list(Id tweet_id, const std::string& token, Pool pool);
  void record(const std::string& token, const std::string& endpoint, Id tweet_id,
              const std::string& outcome, std::uint64_t items);

  WorldTimeline world_;
  ServerConfig config_;
  Time now_;
  std::map<std::pair<std::string, Pool>, WindowCount> windows_;
  std::map<std::string, CapCount> caps_;
  std::vector<AuditRecord> audit_;
  std::function<void(const AuditRecord&)> sink_;
  mutable std::mutex mu_;
};

}  // namespace lw::api
