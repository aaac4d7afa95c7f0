#include "likewatch/server_core.hpp"

#include <algorithm>
#include <sstream>

#include "likewatch/errors.hpp"

namespace lw::api {

const char* pool_name(Pool p) {
  switch (p) {
    case Pool::liking_users:
      return "liking_users";
    case Pool::retweeted_by:
      return "retweeted_by";
    case Pool::search:
      return "search";
  }
  return "?";
}

std::string AuditRecord::to_line() const {
  nlohmann::json j;
  j["ts"] = ts;
  j["token"] = token;
  j["endpoint"] = endpoint;
  if (tweet_id != 0) j["tweet_id"] = tweet_id;
  j["outcome"] = outcome;
  j["items_returned"] = items_returned;
  return j.dump();
}

SimServerCore::SimServerCore(WorldTimeline world, ServerConfig config, Time start_clock)
    : world_(std::move(world)), config_(std::move(config)), now_(start_clock) {}

void SimServerCore::check_token(const std::string& token) const {
  if (token.empty()) throw ConfigError("missing bearer token");
  if (config_.tokens.empty()) return;
  if (std::find(config_.tokens.begin(), config_.tokens.end(), token) == config_.tokens.end())
    throw ConfigError("unknown bearer token");
}

void SimServerCore::record(const std::string& token, const std::string& endpoint,
                           Id tweet_id, const std::string& outcome, std::uint64_t items) {
  AuditRecord r{now_, token, endpoint, tweet_id, outcome, items};
  audit_.push_back(r);
  if (sink_) sink_(r);
}

namespace {

// Query grammar: whitespace-separated terms. Terms starting with '-' are
// ignored filters (the simulator has no retweet posts to exclude); every
// other term must appear among the tweet's tags or in its text.
std::vector<std::string> required_terms(const std::string& query) {
  std::vector<std::string> terms;
  std::istringstream in(query);
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '-') continue;
    terms.push_back(tok);
  }
  if (terms.empty()) throw ConfigError("malformed query: " + query);
  return terms;
}

bool matches(const world::Tweet& t, const std::vector<std::string>& terms) {
  for (const auto& term : terms) {
    bool in_tags = std::find(t.tags.begin(), t.tags.end(), term) != t.tags.end();
    if (!in_tags && t.text.find(term) == std::string::npos) return false;
  }
  return true;
}

}  // namespace

SearchPage SimServerCore::handle_search(const std::string& query, Time start, Time end,
                                        const std::string& page_token,
                                        const std::string& token) {
  std::lock_guard<std::mutex> lock(mu_);
  check_token(token);
  if (start > end) throw ConfigError("start must be <= end");
  auto terms = required_terms(query);

  std::uint64_t offset = 0;
  if (!page_token.empty()) offset = std::stoull(page_token);

  if (config_.search_rate_limit) {
    auto& wc = windows_[{token, Pool::search}];
    std::int64_t widx = window_index(now_);
    if (wc.window != widx) {
      wc.window = widx;
      wc.count = 0;
    }
    if (wc.count + 1 > *config_.search_rate_limit) {
      record(token, "search", 0, "rate_limited", 0);
      throw RateLimitedError("search window exhausted", window_end(now_));
    }
    wc.count += 1;
  }

  // tweets is ordered by created_at; scan the window. Tweets past the
  // virtual clock do not exist yet regardless of the requested window.
  std::vector<const world::Tweet*> all;
  for (const auto& t : world_.tweets) {
    if (t.created_at >= end || t.created_at > now_) break;
    if (t.created_at < start) continue;
    if (matches(t, terms)) all.push_back(&t);
  }

  SearchPage page;
  std::uint64_t upto = std::min<std::uint64_t>(all.size(), offset + config_.page_size);
  std::uint64_t n_items = upto > offset ? upto - offset : 0;

  auto& cap = caps_[token];
  std::int64_t midx = month_index(now_);
  if (cap.month != midx) {
    cap.month = midx;
    cap.count = 0;
  }
  if (cap.count + static_cast<std::int64_t>(n_items) > config_.monthly_tweet_cap) {
    record(token, "search", 0, "rate_limited", 0);
    throw QuotaError("monthly tweet cap exhausted", next_month_start(now_));
  }
  cap.count += static_cast<std::int64_t>(n_items);

  for (std::uint64_t i = offset; i < upto; ++i) {
    const world::Tweet* t = all[i];
    TweetRecord rec;
    rec.id = t->id;
    rec.created_at = t->created_at;
    rec.author_id = t->author_id;
    rec.text = t->text;
    rec.like_count = world::like_count_at(world_, t->id, now_);
    rec.retweet_count = world::retweet_count_at(world_, t->id, now_);
    page.tweets.push_back(std::move(rec));
  }
  if (upto < all.size()) page.next_token = std::to_string(upto);
  record(token, "search", 0, "ok", n_items);
  return page;
}

std::vector<Id> SimServerCore::limited_user_list(Id tweet_id, const std::string& token,
                                                 Pool pool) {
  std::lock_guard<std::mutex> lock(mu_);
  check_token(token);
  const char* endpoint = pool_name(pool);

  auto& wc = windows_[{token, pool}];
  std::int64_t widx = window_index(now_);
  if (wc.window != widx) {
    wc.window = widx;
    wc.count = 0;
  }
  if (wc.count + 1 > config_.rate_limit) {
    record(token, endpoint, tweet_id, "rate_limited", 0);
    throw RateLimitedError(std::string(endpoint) + " window exhausted", window_end(now_));
  }
  wc.count += 1;  // a request counts against the window even when empty

  std::vector<Id> users;
  try {
    users = pool == Pool::liking_users
                ? world::likers_most_recent(world_, tweet_id, now_, config_.page_size)
                : world::retweeters_most_recent(world_, tweet_id, now_, config_.page_size);
  } catch (const NotFoundError&) {
    record(token, endpoint, tweet_id, "not_found", 0);
    throw;
  }
  record(token, endpoint, tweet_id, "ok", users.size());
  return users;
}

std::vector<Id> SimServerCore::handle_liking_users(Id tweet_id, const std::string& token) {
  return limited_user_list(tweet_id, token, Pool::liking_users);
}

std::vector<Id> SimServerCore::handle_retweeted_by(Id tweet_id, const std::string& token) {
  return limited_user_list(tweet_id, token, Pool::retweeted_by);
}

Time SimServerCore::advance_clock(std::int64_t delta_seconds) {
  if (delta_seconds < 0) throw ConfigError("clock can only advance");
  std::lock_guard<std::mutex> lock(mu_);
  now_ += delta_seconds;
  return now_;
}

Time SimServerCore::get_clock() const {
  std::lock_guard<std::mutex> lock(mu_);
  return now_;
}

void SimServerCore::set_clock(Time t) {
  std::lock_guard<std::mutex> lock(mu_);
  if (t < now_) throw ConfigError("clock can only advance");
  now_ = t;
}

const std::map<std::string, std::set<Id>>& SimServerCore::export_ground_truth() const {
  return world_.ground_truth;
}

std::vector<AuditRecord> SimServerCore::export_audit() const {
  std::lock_guard<std::mutex> lock(mu_);
  return audit_;
}

void SimServerCore::set_audit_sink(std::function<void(const AuditRecord&)> sink) {
  std::lock_guard<std::mutex> lock(mu_);
  sink_ = std::move(sink);
}

}  // namespace lw::api
