#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "likewatch/server_core.hpp"

namespace lw::api {

// Transport-independent view of the platform API used by the collector.
class ApiClient {
 public:
  virtual ~ApiClient() = default;

  virtual SearchPage search(const std::string& query, Time start, Time end,
                            const std::string& page_token, const std::string& token) = 0;
  virtual std::vector<Id> liking_users(Id tweet_id, const std::string& token) = 0;
  virtual std::vector<Id> retweeted_by(Id tweet_id, const std::string& token) = 0;

  // admin surface (never rate limited)
  virtual Time advance_clock(std::int64_t delta_seconds) = 0;
  virtual Time now() = 0;
};

// Direct in-process calls; used by the single-process pipeline.
class LocalApiClient : public ApiClient {
 public:
  explicit LocalApiClient(std::shared_ptr<SimServerCore> core) : core_(std::move(core)) {}

  SearchPage search(const std::string& query, Time start, Time end,
                    const std::string& page_token, const std::string& token) override {
    return core_->handle_search(query, start, end, page_token, token);
  }
  std::vector<Id> liking_users(Id tweet_id, const std::string& token) override {
    return core_->handle_liking_users(tweet_id, token);
  }
  std::vector<Id> retweeted_by(Id tweet_id, const std::string& token) override {
    return core_->handle_retweeted_by(tweet_id, token);
  }
  Time advance_clock(std::int64_t delta) override { return core_->advance_clock(delta); }
  Time now() override { return core_->get_clock(); }

  SimServerCore& core() { return *core_; }

 private:
  std::shared_ptr<SimServerCore> core_;
};

// HTTP/1.1 client against the wire protocol of HttpServer.
class HttpApiClient : public ApiClient {
 public:
  explicit HttpApiClient(std::string base_url);
  ~HttpApiClient() override;

  SearchPage search(const std::string& query, Time start, Time end,
                    const std::string& page_token, const std::string& token) override;
  std::vector<Id> liking_users(Id tweet_id, const std::string& token) override;
  std::vector<Id> retweeted_by(Id tweet_id, const std::string& token) override;
  Time advance_clock(std::int64_t delta) override;
  Time now() override;

  std::map<std::string, std::set<Id>> ground_truth();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lw::api
