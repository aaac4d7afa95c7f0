#include "likewatch/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"

namespace lw::world {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config io

static Delivery delivery_from_json(const json& j) {
  Delivery d;
  std::string mode = j.value("mode", "burst");
  if (mode == "burst")
    d.mode = Delivery::Mode::burst;
  else if (mode == "drip")
    d.mode = Delivery::Mode::drip;
  else
    throw ConfigError("unknown delivery mode: " + mode);
  d.window_seconds = j.value("window_seconds", d.window_seconds);
  d.offset_seconds = j.value("offset_seconds", d.offset_seconds);
  d.drip_hours = j.value("drip_hours", d.drip_hours);
  return d;
}

static json delivery_to_json(const Delivery& d) {
  json j;
  j["mode"] = d.mode == Delivery::Mode::burst ? "burst" : "drip";
  j["window_seconds"] = d.window_seconds;
  j["offset_seconds"] = d.offset_seconds;
  j["drip_hours"] = d.drip_hours;
  return j;
}

SimConfig SimConfig::from_json(const json& j) {
  SimConfig c;
  c.seed = j.value("seed", c.seed);
  c.epoch = j.value("epoch", c.epoch);
  c.duration_seconds = j.value("duration_seconds", c.duration_seconds);
  c.tweet_window_seconds = j.value("tweet_window_seconds", c.tweet_window_seconds);
  c.tweet_rate_per_hour = j.value("tweet_rate_per_hour", c.tweet_rate_per_hour);
  c.query_tag = j.value("query_tag", c.query_tag);
  if (j.contains("organic")) {
    const json& o = j.at("organic");
    c.organic.base_rate_per_hour = o.value("base_rate_per_hour", c.organic.base_rate_per_hour);
    c.organic.halflife_hours = o.value("halflife_hours", c.organic.halflife_hours);
    c.organic.popularity_alpha = o.value("popularity_alpha", c.organic.popularity_alpha);
    c.organic.popularity_cap = o.value("popularity_cap", c.organic.popularity_cap);
    c.organic.user_pool = o.value("user_pool", c.organic.user_pool);
    c.organic.unlike_rate = o.value("unlike_rate", c.organic.unlike_rate);
    c.organic.retweet_rate_per_hour =
        o.value("retweet_rate_per_hour", c.organic.retweet_rate_per_hour);
  }
  for (const json& g : j.value("groups", json::array())) {
    CoordGroupSpec s;
    s.group_id = g.at("group_id").get<std::string>();
    s.size = g.at("size").get<std::uint64_t>();
    if (g.contains("target_tweet_indices"))
      s.target_tweet_indices = g.at("target_tweet_indices").get<std::vector<std::uint64_t>>();
    if (g.contains("attach_at_seconds") && !g.at("attach_at_seconds").is_null())
      s.attach_at_seconds = g.at("attach_at_seconds").get<double>();
    if (g.contains("delivery")) s.delivery = delivery_from_json(g.at("delivery"));
    s.extra_organic_noise = g.value("extra_organic_noise", 0.0);
    c.groups.push_back(std::move(s));
  }
  return c;
}

json SimConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["epoch"] = epoch;
  j["duration_seconds"] = duration_seconds;
  j["tweet_window_seconds"] = tweet_window_seconds;
  j["tweet_rate_per_hour"] = tweet_rate_per_hour;
  j["query_tag"] = query_tag;
  json o;
  o["base_rate_per_hour"] = organic.base_rate_per_hour;
  o["halflife_hours"] = organic.halflife_hours;
  o["popularity_alpha"] = organic.popularity_alpha;
  o["popularity_cap"] = organic.popularity_cap;
  o["user_pool"] = organic.user_pool;
  o["unlike_rate"] = organic.unlike_rate;
  o["retweet_rate_per_hour"] = organic.retweet_rate_per_hour;
  j["organic"] = o;
  json gs = json::array();
  for (const auto& g : groups) {
    json gj;
    gj["group_id"] = g.group_id;
    gj["size"] = g.size;
    gj["target_tweet_indices"] = g.target_tweet_indices;
    if (g.attach_at_seconds)
      gj["attach_at_seconds"] = *g.attach_at_seconds;
    else
      gj["attach_at_seconds"] = nullptr;
    gj["delivery"] = delivery_to_json(g.delivery);
    gj["extra_organic_noise"] = g.extra_organic_noise;
    gs.push_back(gj);
  }
  j["groups"] = gs;
  return j;
}

// --------------------------------------------------------------- generation

namespace {

constexpr Id kTweetIdBase = 100001;
constexpr Id kAuthorIdBase = 500001;
constexpr Id kOrganicIdBase = 1000001;
constexpr Id kGroupIdBase = 2000001;
constexpr Id kFreshIdBase = 3000001;

struct EventKey {
  Id user, tweet;
  int kind;
  bool operator==(const EventKey&) const = default;
};
struct EventKeyHash {
  size_t operator()(const EventKey& k) const {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint64_t v : {k.user, k.tweet, static_cast<std::uint64_t>(k.kind)}) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  }
};

void validate(const SimConfig& c) {
  if (c.duration_seconds < 0) throw ConfigError("duration_seconds must be >= 0");
  if (c.tweet_rate_per_hour <= 0) throw ConfigError("tweet_rate_per_hour must be > 0");
  if (c.organic.halflife_hours <= 0) throw ConfigError("halflife_hours must be > 0");
  if (c.organic.base_rate_per_hour < 0) throw ConfigError("base_rate_per_hour must be >= 0");
  if (c.organic.unlike_rate < 0 || c.organic.unlike_rate > 1)
    throw ConfigError("unlike_rate must be in [0,1]");
  for (const auto& g : c.groups) {
    if (g.size < 1) throw ConfigError("group size must be >= 1: " + g.group_id);
    if (g.delivery.window_seconds < 0) throw ConfigError("burst window must be >= 0");
    if (g.target_tweet_indices.empty() && !g.attach_at_seconds)
      throw ConfigError("group has no target tweets: " + g.group_id);
  }
}

}  // namespace

WorldTimeline generate_world(const SimConfig& config) {
  validate(config);
  WorldTimeline w;
  w.config = config;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const Time end = config.epoch + config.duration_seconds;
  const std::int64_t tweet_window = config.tweet_window_seconds >= 0
                                        ? config.tweet_window_seconds
                                        : config.duration_seconds;

  // Tweet arrivals: Poisson process over the tweet window.
  {
    std::exponential_distribution<double> gap(config.tweet_rate_per_hour / 3600.0);
    double t = 0;
    std::uint64_t i = 0;
    while (true) {
      t += gap(rng);
      if (t >= static_cast<double>(tweet_window)) break;
      Tweet tw;
      tw.id = kTweetIdBase + i;
      tw.created_at = config.epoch + static_cast<Time>(t);
      tw.author_id = kAuthorIdBase + i;
      tw.text = "tweet " + std::to_string(i) + " " + config.query_tag;
      tw.tags = {config.query_tag};
      w.tweets.push_back(std::move(tw));
      ++i;
    }
  }

  std::unordered_set<EventKey, EventKeyHash> seen;
  Id fresh_counter = 0;
  auto push_event = [&](Time ts, Id user, Id tweet, EventKind kind, Time retract) {
    if (ts < config.epoch || ts >= end) return false;
    EventKey key{user, tweet, static_cast<int>(kind)};
    if (!seen.insert(key).second) return false;  // (user, tweet, kind) at most once
    w.events.push_back({ts, user, tweet, kind, retract});
    return true;
  };
  auto draw_organic_user = [&]() -> Id {
    if (config.organic.user_pool == 0) return kFreshIdBase + fresh_counter++;
    return kOrganicIdBase +
           static_cast<Id>(unif(rng) * static_cast<double>(config.organic.user_pool));
  };
  // Inverse-CDF sample of the exponentially decaying activity profile.
  auto decay_offset = [&]() -> double {
    double u = unif(rng);
    return -config.organic.halflife_hours * 3600.0 * std::log2(1.0 - u);
  };

  // Organic likes and retweets: per-tweet heavy-tailed popularity, thinned
  // Poisson totals, decaying like times.
  const double mass = config.organic.halflife_hours / std::log(2.0);
  for (const Tweet& tw : w.tweets) {
    double pareto = std::pow(std::max(unif(rng), 1e-12), -1.0 / config.organic.popularity_alpha);
    double expected_likes =
        std::min(config.organic.popularity_cap, config.organic.base_rate_per_hour * mass * pareto);
    std::uint64_t n_likes = 0;
    if (expected_likes > 0) {
      std::poisson_distribution<std::uint64_t> pois(expected_likes);
      n_likes = pois(rng);
    }
    for (std::uint64_t k = 0; k < n_likes; ++k) {
      Time ts = tw.created_at + static_cast<Time>(decay_offset());
      Id user = draw_organic_user();
      Time retract = -1;
      if (config.organic.unlike_rate > 0 && unif(rng) < config.organic.unlike_rate) {
        std::exponential_distribution<double> lag(1.0 / 3600.0);
        Time r = ts + static_cast<Time>(lag(rng)) + 1;
        if (r < end) retract = r;
      }
      push_event(ts, user, tw.id, EventKind::like, retract);
    }
    double expected_rts =
        std::min(config.organic.popularity_cap,
                 config.organic.retweet_rate_per_hour * mass * pareto);
    std::uint64_t n_rts = 0;
    if (expected_rts > 0) {
      std::poisson_distribution<std::uint64_t> pois(expected_rts);
      n_rts = pois(rng);
    }
    for (std::uint64_t k = 0; k < n_rts; ++k) {
      Time ts = tw.created_at + static_cast<Time>(decay_offset());
      push_event(ts, draw_organic_user(), tw.id, EventKind::retweet, -1);
    }
  }

  // Injected coordinated groups.
  Id group_user_base = kGroupIdBase;
  for (const auto& spec : config.groups) {
    std::vector<std::uint64_t> targets = spec.target_tweet_indices;
    if (spec.attach_at_seconds) {
      Time at = config.epoch + static_cast<Time>(*spec.attach_at_seconds);
      for (std::uint64_t i = 0; i < w.tweets.size(); ++i) {
        if (w.tweets[i].created_at >= at) {
          targets.push_back(i);
          break;
        }
      }
    }
    if (targets.empty()) throw ConfigError("group resolves to no tweets: " + spec.group_id);
    for (std::uint64_t idx : targets)
      if (idx >= w.tweets.size())
        throw ConfigError("group target index out of range: " + spec.group_id);

    auto& truth = w.ground_truth[spec.group_id];
    for (std::uint64_t m = 0; m < spec.size; ++m) {
      Id user = group_user_base + m;
      bool active = false;
      for (std::uint64_t idx : targets) {
        const Tweet& tw = w.tweets[idx];
        double off;
        if (spec.delivery.mode == Delivery::Mode::burst)
          off = spec.delivery.offset_seconds + unif(rng) * spec.delivery.window_seconds;
        else
          off = unif(rng) * spec.delivery.drip_hours * 3600.0;
        active |= push_event(tw.created_at + static_cast<Time>(off), user, tw.id,
                             EventKind::like, -1);
      }
      if (spec.extra_organic_noise > 0 && unif(rng) < spec.extra_organic_noise &&
          !w.tweets.empty()) {
        // one extra like on a random non-target tweet
        std::uint64_t idx =
            static_cast<std::uint64_t>(unif(rng) * static_cast<double>(w.tweets.size()));
        idx = std::min<std::uint64_t>(idx, w.tweets.size() - 1);
        bool is_target = std::find(targets.begin(), targets.end(), idx) != targets.end();
        if (!is_target) {
          const Tweet& tw = w.tweets[idx];
          active |= push_event(tw.created_at + static_cast<Time>(decay_offset()), user,
                               tw.id, EventKind::like, -1);
        }
      }
      if (active) truth.insert(user);
    }
    group_user_base += 10000;
  }

  std::sort(w.events.begin(), w.events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.ts, a.user_id, a.tweet_id) < std::tie(b.ts, b.user_id, b.tweet_id);
  });
  return w;
}

// ------------------------------------------------------------------ queries

const Tweet* WorldTimeline::find_tweet(Id id) const {
  for (const Tweet& t : tweets)
    if (t.id == id) return &t;
  return nullptr;
}

struct WorldTimeline::EventIndex {
  struct PerTweet {
    std::vector<const Event*> likes;  // global order
    std::vector<const Event*> retweets;
  };
  const Event* data = nullptr;  // storage the pointers refer to
  std::size_t size = 0;
  std::size_t tweet_count = 0;
  std::unordered_map<Id, PerTweet> per_tweet;
};

namespace {

using PerTweet = WorldTimeline::EventIndex::PerTweet;

const WorldTimeline::EventIndex& tweet_index(const WorldTimeline& w) {
  const Event* data = w.events.empty() ? nullptr : w.events.data();
  auto cached = w.index_cache;
  if (cached && cached->data == data && cached->size == w.events.size() &&
      cached->tweet_count == w.tweets.size())
    return *cached;
  auto idx = std::make_shared<WorldTimeline::EventIndex>();
  idx->data = data;
  idx->size = w.events.size();
  idx->tweet_count = w.tweets.size();
  for (const Tweet& t : w.tweets) idx->per_tweet[t.id];
  for (const Event& e : w.events) {
    auto& pt = idx->per_tweet[e.tweet_id];
    (e.kind == EventKind::like ? pt.likes : pt.retweets).push_back(&e);
  }
  w.index_cache = idx;
  return *w.index_cache;
}

std::uint64_t count_at(const std::vector<const Event*>& evs, Time t) {
  std::uint64_t n = 0;
  for (const Event* e : evs) {
    if (e->ts > t) break;
    if (e->retract_at >= 0 && e->retract_at <= t) continue;
    ++n;
  }
  return n;
}

std::vector<Id> recent(const std::vector<const Event*>& evs, Time t, std::uint64_t k) {
  std::vector<Id> out;
  for (auto it = evs.rbegin(); it != evs.rend() && out.size() < k; ++it) {
    const Event* e = *it;
    if (e->ts > t) continue;
    if (e->retract_at >= 0 && e->retract_at <= t) continue;
    out.push_back(e->user_id);
  }
  return out;
}

const PerTweet& require_tweet(const WorldTimeline& w, Id tweet_id) {
  const auto& idx = tweet_index(w).per_tweet;
  auto it = idx.find(tweet_id);
  if (it == idx.end()) throw NotFoundError("unknown tweet: " + std::to_string(tweet_id));
  return it->second;
}

}  // namespace

std::uint64_t like_count_at(const WorldTimeline& w, Id tweet_id, Time t) {
  return count_at(require_tweet(w, tweet_id).likes, t);
}

std::uint64_t retweet_count_at(const WorldTimeline& w, Id tweet_id, Time t) {
  return count_at(require_tweet(w, tweet_id).retweets, t);
}

std::vector<Id> likers_most_recent(const WorldTimeline& w, Id tweet_id, Time t,
                                   std::uint64_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  return recent(require_tweet(w, tweet_id).likes, t, k);
}

std::vector<Id> retweeters_most_recent(const WorldTimeline& w, Id tweet_id, Time t,
                                       std::uint64_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  return recent(require_tweet(w, tweet_id).retweets, t, k);
}

// -------------------------------------------------------------- persistence

void WorldTimeline::save(const fs::path& dir) const {
  fs::create_directories(dir);
  json header;
  header["schema_version"] = 1;
  header["config"] = config.to_json();
  json tws = json::array();
  for (const Tweet& t : tweets) {
    json tj;
    tj["id"] = t.id;
    tj["created_at"] = t.created_at;
    tj["author_id"] = t.author_id;
    tj["text"] = t.text;
    tj["tags"] = t.tags;
    tws.push_back(tj);
  }
  header["tweets"] = tws;
  json gt;
  for (const auto& [gid, users] : ground_truth) gt[gid] = users;
  header["ground_truth"] = gt;
  atomic_write(dir / "world.json", header.dump(2) + "\n");

  // one event per line: epoch_seconds kind user_id tweet_id; retractions
  // appear as separate "unlike" lines merged in timestamp order
  struct Line {
    Time ts;
    int order;  // unlike after like at equal ts
    std::string text;
  };
  std::vector<Line> lines;
  lines.reserve(events.size());
  for (const Event& e : events) {
    const char* kind = e.kind == EventKind::like ? "like" : "retweet";
    lines.push_back({e.ts, 0,
                     std::to_string(e.ts) + " " + kind + " " + std::to_string(e.user_id) +
                         " " + std::to_string(e.tweet_id)});
    if (e.retract_at >= 0)
      lines.push_back({e.retract_at, 1,
                       std::to_string(e.retract_at) + " unlike " +
                           std::to_string(e.user_id) + " " + std::to_string(e.tweet_id)});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return std::tie(a.ts, a.order) < std::tie(b.ts, b.order);
  });
  std::string body;
  for (const Line& l : lines) {
    body += l.text;
    body += '\n';
  }
  atomic_write(dir / "events.ldj", body);
}

WorldTimeline WorldTimeline::load(const fs::path& dir) {
  WorldTimeline w;
  json header = json::parse(read_file(dir / "world.json"));
  if (header.value("schema_version", 0) != 1)
    throw ConfigError("unsupported world schema version in " + (dir / "world.json").string());
  w.config = SimConfig::from_json(header.at("config"));
  for (const json& tj : header.at("tweets")) {
    Tweet t;
    t.id = tj.at("id").get<Id>();
    t.created_at = tj.at("created_at").get<Time>();
    t.author_id = tj.at("author_id").get<Id>();
    t.text = tj.at("text").get<std::string>();
    t.tags = tj.at("tags").get<std::vector<std::string>>();
    w.tweets.push_back(std::move(t));
  }
  for (auto& [gid, users] : header.at("ground_truth").items())
    w.ground_truth[gid] = users.get<std::set<Id>>();

  std::unordered_map<EventKey, size_t, EventKeyHash> where;
  std::istringstream in(read_file(dir / "events.ldj"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Time ts;
    std::string kind;
    Id user, tweet;
    if (!(ls >> ts >> kind >> user >> tweet))
      throw IoError("bad event line in events.ldj: " + line);
    if (kind == "unlike") {
      auto it = where.find({user, tweet, static_cast<int>(EventKind::like)});
      if (it == where.end()) throw IoError("unlike without matching like: " + line);
      w.events[it->second].retract_at = ts;
      continue;
    }
    EventKind k = kind == "like" ? EventKind::like : EventKind::retweet;
    if (kind != "like" && kind != "retweet") throw IoError("unknown event kind: " + line);
    where[{user, tweet, static_cast<int>(k)}] = w.events.size();
    w.events.push_back({ts, user, tweet, k, -1});
  }
  std::sort(w.events.begin(), w.events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.ts, a.user_id, a.tweet_id) < std::tie(b.ts, b.user_id, b.tweet_id);
  });
  return w;
}

}  // namespace lw::world
