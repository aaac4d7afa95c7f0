#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "likewatch/timeutil.hpp"
#include "likewatch/vendor_json.hpp"

namespace lw::world {

using Id = std::uint64_t;

struct OrganicModel {
  double base_rate_per_hour = 1.0;   // expected like rate scale at t=0
  double halflife_hours = 6.0;       // exponential decay of liking activity
  double popularity_alpha = 1.5;     // Pareto shape of per-tweet popularity
  double popularity_cap = 80.0;      // hard ceiling on a tweet's expected likes
  std::uint64_t user_pool = 5000;    // 0 = a fresh user per like
  double unlike_rate = 0.0;          // probability a like is later retracted
  double retweet_rate_per_hour = 0.0;
};

struct Delivery {
  enum class Mode { burst, drip };
  Mode mode = Mode::burst;
  double window_seconds = 60.0;   // burst: likes land inside this window
  double offset_seconds = 300.0;  // burst: window start after tweet creation
  double drip_hours = 10.0;       // drip: likes spread uniformly over this span
};

struct CoordGroupSpec {
  std::string group_id;
  std::uint64_t size = 1;
  std::vector<std::uint64_t> target_tweet_indices;  // indices among generated tweets
  std::optional<double> attach_at_seconds;  // alternatively: first tweet created at/after this offset
  Delivery delivery;
  double extra_organic_noise = 0.0;  // per-member chance of one extra random like
};

struct SimConfig {
  std::uint64_t seed = 1;
  Time epoch = 1653480000;             // world start, epoch seconds
  std::int64_t duration_seconds = 0;   // like/retweet events land in [epoch, epoch+duration)
  std::int64_t tweet_window_seconds = -1;  // tweets created in [epoch, epoch+window); -1 = duration
  double tweet_rate_per_hour = 1.0;
  std::string query_tag = "#dkpol";
  OrganicModel organic;
  std::vector<CoordGroupSpec> groups;

  static SimConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Tweet {
  Id id = 0;
  Time created_at = 0;
  Id author_id = 0;
  std::string text;
  std::vector<std::string> tags;
};

enum class EventKind { like, retweet };

struct Event {
  Time ts = 0;
  Id user_id = 0;
  Id tweet_id = 0;
  EventKind kind = EventKind::like;
  Time retract_at = -1;  // -1 = never retracted (likes only)
};

struct WorldTimeline {
  SimConfig config;
  std::vector<Tweet> tweets;                       // ordered by created_at
  std::vector<Event> events;                       // ordered by (ts, user_id, tweet_id)
  std::map<std::string, std::set<Id>> ground_truth;

  const Tweet* find_tweet(Id id) const;

  void save(const std::filesystem::path& dir) const;
  static WorldTimeline load(const std::filesystem::path& dir);

  // lazily built per-tweet event index; rebuilt whenever the events storage
  // (pointer or length) changes, so copies and in-place edits stay correct
  struct EventIndex;
  mutable std::shared_ptr<const EventIndex> index_cache;
};

WorldTimeline generate_world(const SimConfig& config);

// Likes visible on a tweet at virtual time t (retractions respected).
std::uint64_t like_count_at(const WorldTimeline& w, Id tweet_id, Time t);
std::uint64_t retweet_count_at(const WorldTimeline& w, Id tweet_id, Time t);

// The <=k likers with the largest event timestamps <= t, most recent first.
std::vector<Id> likers_most_recent(const WorldTimeline& w, Id tweet_id, Time t,
                                   std::uint64_t k);
std::vector<Id> retweeters_most_recent(const WorldTimeline& w, Id tweet_id, Time t,
                                       std::uint64_t k);

}  // namespace lw::world
