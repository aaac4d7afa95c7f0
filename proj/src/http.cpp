#include <atomic>
#include <thread>

#include "httplib.h"
#include "likewatch/api_client.hpp"
#include "likewatch/errors.hpp"
#include "likewatch/http_server.hpp"

namespace lw::api {

using nlohmann::json;

// ------------------------------------------------------------------ server

namespace {

std::string bearer_token(const httplib::Request& req) {
  std::string auth = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (auth.rfind(prefix, 0) == 0) return auth.substr(prefix.size());
  return "";
}

json tweet_to_json(const TweetRecord& t) {
  json j;
  j["id"] = std::to_string(t.id);
  j["created_at"] = rfc3339(t.created_at);
  j["author_id"] = std::to_string(t.author_id);
  j["text"] = t.text;
  j["public_metrics"] = {{"like_count", t.like_count}, {"retweet_count", t.retweet_count}};
  return j;
}

void fail(httplib::Response& res, int status, const std::string& msg) {
  res.status = status;
  res.set_content(json{{"error", msg}}.dump(), "application/json");
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<SimServerCore> core;
  std::string host;
  int port;
  httplib::Server server;
  std::thread thread;
  std::atomic<int> bound_port{0};

  void route() {
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("x-virtual-now", std::to_string(core->get_clock()));
    });

    auto guarded = [this](auto fn) {
      return [this, fn](const httplib::Request& req, httplib::Response& res) {
        try {
          fn(req, res);
        } catch (const RateLimitedError& e) {
          res.status = 429;
          res.set_content(json{{"reset_epoch_seconds", e.reset_epoch_seconds}}.dump(),
                          "application/json");
        } catch (const QuotaError& e) {
          res.status = 429;
          res.set_content(json{{"reset_epoch_seconds", e.reset_epoch_seconds}}.dump(),
                          "application/json");
        } catch (const NotFoundError& e) {
          fail(res, 404, e.what());
        } catch (const ConfigError& e) {
          fail(res, 400, e.what());
        } catch (const std::exception& e) {
          fail(res, 500, e.what());
        }
      };
    };

    server.Get("/2/tweets/search", guarded([this](const httplib::Request& req,
                                                  httplib::Response& res) {
      std::string token = bearer_token(req);
      std::string query = req.get_param_value("query");
      Time start = parse_time(req.get_param_value("start_time"));
      Time end = parse_time(req.get_param_value("end_time"));
      std::string page = req.get_param_value("pagination_token");
      SearchPage p = core->handle_search(query, start, end, page, token);
      json data = json::array();
      for (const auto& t : p.tweets) data.push_back(tweet_to_json(t));
      json meta = json::object();
      if (p.next_token) meta["next_token"] = *p.next_token;
      res.set_content(json{{"data", data}, {"meta", meta}}.dump(), "application/json");
    }));

    auto user_list = [this](Pool pool) {
      return [this, pool](const httplib::Request& req, httplib::Response& res) {
        Id id = std::stoull(req.matches[1].str());
        auto users = pool == Pool::liking_users
                         ? core->handle_liking_users(id, bearer_token(req))
                         : core->handle_retweeted_by(id, bearer_token(req));
        json data = json::array();
        for (Id u : users) data.push_back(json{{"id", std::to_string(u)}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
      };
    };
    server.Get(R"(/2/tweets/(\d+)/liking_users)", guarded(user_list(Pool::liking_users)));
    server.Get(R"(/2/tweets/(\d+)/retweeted_by)", guarded(user_list(Pool::retweeted_by)));

    server.Post("/admin/advance_clock", guarded([this](const httplib::Request& req,
                                                       httplib::Response& res) {
      json body = json::parse(req.body);
      Time now = core->advance_clock(body.at("delta_seconds").get<std::int64_t>());
      res.set_content(json{{"now", now}}.dump(), "application/json");
    }));
    server.Get("/admin/time", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"now", core->get_clock()}}.dump(), "application/json");
    }));
    server.Get("/admin/ground_truth",
               guarded([this](const httplib::Request&, httplib::Response& res) {
                 json out = json::object();
                 for (const auto& [gid, users] : core->export_ground_truth()) out[gid] = users;
                 res.set_content(out.dump(), "application/json");
               }));
    server.Get("/admin/audit", guarded([this](const httplib::Request&, httplib::Response& res) {
      json data = json::array();
      for (const auto& r : core->export_audit()) data.push_back(json::parse(r.to_line()));
      res.set_content(json{{"data", data}}.dump(), "application/json");
    }));
  }
};

HttpServer::HttpServer(std::shared_ptr<SimServerCore> core, std::string host, int port)
    : impl_(new Impl{std::move(core), std::move(host), port}) {
  impl_->route();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  int port = impl_->port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->host);
    if (port <= 0) throw IoError("cannot bind " + impl_->host);
  } else if (!impl_->server.bind_to_port(impl_->host, port)) {
    throw IoError("cannot bind " + impl_->host + ":" + std::to_string(port));
  }
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

SimServerCore& HttpServer::core() { return *impl_->core; }

// ------------------------------------------------------------------ client

struct HttpApiClient::Impl {
  std::string base_url;
  httplib::Client client;
  explicit Impl(std::string url) : base_url(url), client(url) {
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
  }
};

HttpApiClient::HttpApiClient(std::string base_url)
    : impl_(new Impl(std::move(base_url))) {}

HttpApiClient::~HttpApiClient() = default;

namespace {

json check_response(const httplib::Result& res, const std::string& what) {
  if (!res)
    throw ResumableError("network failure during " + what + ": " +
                         httplib::to_string(res.error()));
  if (res->status == 429) {
    json body = json::parse(res->body);
    throw RateLimitedError(what + " rate limited",
                           body.at("reset_epoch_seconds").get<std::int64_t>());
  }
  if (res->status == 404) throw NotFoundError(what + ": not found");
  if (res->status >= 400)
    throw ConfigError(what + " failed (" + std::to_string(res->status) + "): " + res->body);
  return json::parse(res->body);
}

Id parse_id(const json& j) { return std::stoull(j.get<std::string>()); }

}  // namespace

SearchPage HttpApiClient::search(const std::string& query, Time start, Time end,
                                 const std::string& page_token, const std::string& token) {
  httplib::Params params{{"query", query},
                         {"start_time", std::to_string(start)},
                         {"end_time", std::to_string(end)}};
  if (!page_token.empty()) params.emplace("pagination_token", page_token);
  httplib::Headers headers{{"Authorization", "Bearer " + token}};
  auto res = impl_->client.Get("/2/tweets/search", params, headers);
  json body = check_response(res, "search");
  SearchPage page;
  for (const json& tj : body.at("data")) {
    TweetRecord t;
    t.id = parse_id(tj.at("id"));
    t.created_at = parse_time(tj.at("created_at").get<std::string>());
    t.author_id = parse_id(tj.at("author_id"));
    t.text = tj.at("text").get<std::string>();
    t.like_count = tj.at("public_metrics").at("like_count").get<std::uint64_t>();
    t.retweet_count = tj.at("public_metrics").at("retweet_count").get<std::uint64_t>();
    page.tweets.push_back(std::move(t));
  }
  if (body.contains("meta") && body.at("meta").contains("next_token"))
    page.next_token = body.at("meta").at("next_token").get<std::string>();
  return page;
}

std::vector<Id> HttpApiClient::liking_users(Id tweet_id, const std::string& token) {
  httplib::Headers headers{{"Authorization", "Bearer " + token}};
  auto res = impl_->client.Get("/2/tweets/" + std::to_string(tweet_id) + "/liking_users",
                               headers);
  json body = check_response(res, "liking_users");
  std::vector<Id> out;
  for (const json& uj : body.at("data")) out.push_back(parse_id(uj.at("id")));
  return out;
}

std::vector<Id> HttpApiClient::retweeted_by(Id tweet_id, const std::string& token) {
  httplib::Headers headers{{"Authorization", "Bearer " + token}};
  auto res = impl_->client.Get("/2/tweets/" + std::to_string(tweet_id) + "/retweeted_by",
                               headers);
  json body = check_response(res, "retweeted_by");
  std::vector<Id> out;
  for (const json& uj : body.at("data")) out.push_back(parse_id(uj.at("id")));
  return out;
}

Time HttpApiClient::advance_clock(std::int64_t delta) {
  auto res = impl_->client.Post("/admin/advance_clock",
                                json{{"delta_seconds", delta}}.dump(), "application/json");
  return check_response(res, "advance_clock").at("now").get<Time>();
}

Time HttpApiClient::now() {
  auto res = impl_->client.Get("/admin/time");
  return check_response(res, "time").at("now").get<Time>();
}

std::map<std::string, std::set<Id>> HttpApiClient::ground_truth() {
  auto res = impl_->client.Get("/admin/ground_truth");
  json body = check_response(res, "ground_truth");
  std::map<std::string, std::set<Id>> out;
  for (auto& [gid, users] : body.items()) out[gid] = users.get<std::set<Id>>();
  return out;
}

}  // namespace lw::api
