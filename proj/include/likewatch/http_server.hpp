#pragma once

#include <memory>
#include <string>

#include "likewatch/server_core.hpp"

namespace lw::api {

// HTTP/1.1 frontend over SimServerCore.
//
//   GET /2/tweets/search?query=&start_time=&end_time=&pagination_token=
//   GET /2/tweets/{id}/liking_users
//   GET /2/tweets/{id}/retweeted_by
//   POST /admin/advance_clock {"delta_seconds": n}
//   GET /admin/ground_truth | /admin/audit | /admin/time
//
// Data endpoints authenticate with "Authorization: Bearer <token>". Every
// response carries the x-virtual-now header. 429 bodies are
// {"reset_epoch_seconds": n}.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<SimServerCore> core, std::string host, int port);
  ~HttpServer();

  // Binds and serves on a background thread. Returns the bound port.
  int start();
  void stop();

  SimServerCore& core();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lw::api
