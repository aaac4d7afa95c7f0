#include "likewatch.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "likewatch/errors.hpp"
#include "likewatch/http_server.hpp"
#include "likewatch/pipeline.hpp"
#include "likewatch/world.hpp"
#include "likewatch/vendor_json.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

lw_status code_for(const lw::Error& e) {
  switch (e.code()) {
    case lw::ErrorCode::config: return LW_ERR_CONFIG;
    case lw::ErrorCode::io: return LW_ERR_IO;
    case lw::ErrorCode::not_found: return LW_ERR_NOT_FOUND;
    case lw::ErrorCode::rate_limited: return LW_ERR_RATE_LIMITED;
    case lw::ErrorCode::quota: return LW_ERR_QUOTA;
    case lw::ErrorCode::numeric: return LW_ERR_NUMERIC;
    case lw::ErrorCode::resumable: return LW_ERR_RESUMABLE;
    case lw::ErrorCode::internal: return LW_ERR_INTERNAL;
  }
  return LW_ERR_INTERNAL;
}

template <typename Fn>
lw_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LW_OK;
  } catch (const lw::Error& e) {
    g_last_error = e.what();
    return code_for(e);
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return LW_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LW_ERR_INTERNAL;
  }
}

json parse_options(const char* options_json) {
  if (options_json == nullptr || *options_json == '\0') return json::object();
  return json::parse(options_json);
}

template <typename T>
T* require(T* arg, const char* name) {
  if (arg == nullptr) throw lw::ConfigError(std::string(name) + " must not be NULL");
  return arg;
}

}  // namespace

struct lw_server {
  std::shared_ptr<lw::api::SimServerCore> core;
  std::unique_ptr<lw::api::HttpServer> http;
  int port = 0;
};

extern "C" {

const char* lw_last_error(void) { return g_last_error.c_str(); }

lw_status lw_simulate(const char* config_json, const char* out_dir) {
  return guarded([&] {
    lw::pipeline::run_simulate(json::parse(require(config_json, "config_json")),
                               require(out_dir, "out_dir"));
  });
}

lw_status lw_server_start(const char* world_dir, const char* host, int port,
                          const char* server_config_json, lw_server** out) {
  return guarded([&] {
    require(world_dir, "world_dir");
    require(out, "out");
    json sj = parse_options(server_config_json);
    lw::api::ServerConfig conf;
    if (sj.contains("tokens")) conf.tokens = sj.at("tokens").get<std::vector<std::string>>();
    conf.rate_limit = sj.value("rate_limit", conf.rate_limit);
    conf.monthly_tweet_cap = sj.value("monthly_tweet_cap", conf.monthly_tweet_cap);
    if (sj.contains("search_rate_limit"))
      conf.search_rate_limit = sj.at("search_rate_limit").get<int>();
    conf.page_size = sj.value("page_size", conf.page_size);

    auto world = lw::world::WorldTimeline::load(world_dir);
    lw::Time start = sj.value("start_clock", world.config.epoch);
    auto srv = std::make_unique<lw_server>();
    srv->core = std::make_shared<lw::api::SimServerCore>(std::move(world), conf, start);
    srv->http = std::make_unique<lw::api::HttpServer>(
        srv->core, host && *host ? host : "127.0.0.1", port);
    srv->port = srv->http->start();
    *out = srv.release();
  });
}

int lw_server_port(const lw_server* server) { return server ? server->port : 0; }

void lw_server_stop(lw_server* server) {
  if (!server) return;
  server->http->stop();
  delete server;
}

lw_status lw_collect(const char* config_json, const char* server_url,
                     const char* out_dir, int virtual_clock) {
  return guarded([&] {
    lw::pipeline::run_collect(json::parse(require(config_json, "config_json")),
                              require(server_url, "server_url"),
                              require(out_dir, "out_dir"), virtual_clock != 0);
  });
}

lw_status lw_pipeline(const char* run_config_json, const char* out_dir,
                      int64_t crash_after_pulls) {
  return guarded([&] {
    lw::pipeline::run_pipeline(json::parse(require(run_config_json, "run_config_json")),
                               require(out_dir, "out_dir"), crash_after_pulls);
  });
}

lw_status lw_bins(const char* dataset_dir, const char* out_dir,
                  const char* options_json) {
  return guarded([&] {
    lw::pipeline::run_bins(require(dataset_dir, "dataset_dir"),
                           require(out_dir, "out_dir"),
                           lw::pipeline::AnalysisOptions::from_json(parse_options(options_json)));
  });
}

lw_status lw_embed(const char* dataset_dir, const char* out_dir,
                   const char* options_json) {
  return guarded([&] {
    lw::pipeline::run_embed(require(dataset_dir, "dataset_dir"),
                            require(out_dir, "out_dir"),
                            lw::pipeline::AnalysisOptions::from_json(parse_options(options_json)));
  });
}

lw_status lw_eval(const char* dataset_dir, const char* world_dir,
                  const char* out_dir, const char* options_json) {
  return guarded([&] {
    json opts = parse_options(options_json);
    lw::pipeline::run_eval(require(dataset_dir, "dataset_dir"),
                           require(world_dir, "world_dir"),
                           require(out_dir, "out_dir"),
                           lw::pipeline::EvalOptions::from_json(opts),
                           lw::pipeline::AnalysisOptions::from_json(opts));
  });
}

lw_status lw_report(const char* run_dir, char** out_json) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(out_json, "out_json");
    std::string s = lw::pipeline::run_report(run_dir).dump(2) + "\n";
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw lw::InternalError("out of memory");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out_json = buf;
  });
}

void lw_free(char* buf) { std::free(buf); }

}  // extern "C"
