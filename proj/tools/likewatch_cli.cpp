// likewatch command-line frontend. Talks to the library exclusively through
// the C interface in likewatch.h.
#include <chrono>
#include <csignal>
#include <cstdio>
#include <thread>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "likewatch.h"

namespace {

std::string read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int finish(lw_status st) {
  if (st == LW_OK) return 0;
  std::cerr << "error: " << lw_last_error() << "\n";
  // resumable interruptions get their own exit code so wrappers can rerun
  return st == LW_ERR_RESUMABLE ? 3 : 1;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"likewatch: simulate a likes platform, collect liking users "
               "under its quotas, and detect coordinated groups"};
  app.require_subcommand(1);

  std::string config, out, world, dataset, server_url, run_dir;
  std::string addr = "127.0.0.1:8080";
  std::string options = "{}";
  bool wall_clock = false;
  std::int64_t crash_after_pulls = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a simulated world");
  sim->add_option("--config", config, "World config JSON file")->required();
  sim->add_option("--out", out, "Output world directory")->required();

  auto* serve = app.add_subcommand("serve", "Serve a world directory over HTTP");
  serve->add_option("--world", world, "World directory")->required();
  serve->add_option("--addr", addr, "host:port to bind (default 127.0.0.1:8080)");
  serve->add_option("--options", options, "Server options JSON string");

  auto* col = app.add_subcommand("collect", "Run the collector against a server");
  col->add_option("--config", config, "Collector config JSON file")->required();
  col->add_option("--server", server_url, "Server base URL")->required();
  col->add_option("--out", out, "Output dataset directory")->required();
  col->add_flag("--wall-clock", wall_clock,
                "Sleep in real time instead of advancing the server clock");

  auto* pipe = app.add_subcommand("pipeline", "Full run: simulate, collect, analyze, evaluate");
  pipe->add_option("--config", config, "Run config JSON file")->required();
  pipe->add_option("--out", out, "Run output directory")->required();
  pipe->add_option("--crash-after-pulls", crash_after_pulls,
                   "Abort after N pulls (resume by rerunning)");

  auto* bins = app.add_subcommand("bins", "Bin users by identical like profiles");
  bins->add_option("--dataset", dataset, "Dataset directory")->required();
  bins->add_option("--out", out, "Output directory")->required();
  bins->add_option("--options", options, "Analysis options JSON string");

  auto* emb = app.add_subcommand("embed", "2-D spectral embedding of users");
  emb->add_option("--dataset", dataset, "Dataset directory")->required();
  emb->add_option("--out", out, "Output directory")->required();
  emb->add_option("--options", options, "Analysis options JSON string");

  auto* ev = app.add_subcommand("eval", "Evaluate a dataset against its world");
  ev->add_option("--dataset", dataset, "Dataset directory")->required();
  ev->add_option("--world", world, "World directory")->required();
  ev->add_option("--out", out, "Output directory")->required();
  ev->add_option("--options", options, "Eval options JSON string");

  auto* rep = app.add_subcommand("report", "Print a summary of a pipeline run");
  rep->add_option("--run", run_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed())
    return finish(lw_simulate(read_json_file(config).c_str(), out.c_str()));

  if (serve->parsed()) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "error: --addr must be host:port\n";
      return 2;
    }
    std::string host = addr.substr(0, colon);
    int port = std::stoi(addr.substr(colon + 1));
    lw_server* srv = nullptr;
    lw_status st = lw_server_start(world.c_str(), host.c_str(), port,
                                   options.c_str(), &srv);
    if (st != LW_OK) return finish(st);
    std::cout << "serving " << world << " on " << host << ":"
              << lw_server_port(srv) << std::endl;
    std::signal(SIGINT, [](int) { g_stop = 1; });
    std::signal(SIGTERM, [](int) { g_stop = 1; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    lw_server_stop(srv);
    return 0;
  }

  if (col->parsed())
    return finish(lw_collect(read_json_file(config).c_str(), server_url.c_str(),
                             out.c_str(), wall_clock ? 0 : 1));

  if (pipe->parsed())
    return finish(lw_pipeline(read_json_file(config).c_str(), out.c_str(),
                              crash_after_pulls));

  if (bins->parsed())
    return finish(lw_bins(dataset.c_str(), out.c_str(), options.c_str()));

  if (emb->parsed())
    return finish(lw_embed(dataset.c_str(), out.c_str(), options.c_str()));

  if (ev->parsed())
    return finish(lw_eval(dataset.c_str(), world.c_str(), out.c_str(), options.c_str()));

  if (rep->parsed()) {
    char* buf = nullptr;
    lw_status st = lw_report(run_dir.c_str(), &buf);
    if (st != LW_OK) return finish(st);
    std::fputs(buf, stdout);
    lw_free(buf);
    return 0;
  }

  return 2;
}
