#pragma once

#include <filesystem>
#include <string>

#include "likewatch/vendor_json.hpp"

namespace lw::pipeline {

struct AnalysisOptions {
  double c = 0.95;                       // pairwise chance-correlation parameter
  std::uint64_t min_bin_size = 50;       // "large bin" threshold for reporting
  std::uint64_t histogram_min_size = 1;
  std::size_t dense_cap = 2000;
  bool svg = true;

  static AnalysisOptions from_json(const nlohmann::json& j);
};

struct EvalOptions {
  std::string population = "final_harvest";  // or "all"
  std::uint64_t detection_min_size = 50;

  static EvalOptions from_json(const nlohmann::json& j);
};

// simulate: generate a world directory from a SimConfig document.
void run_simulate(const nlohmann::json& config, const std::filesystem::path& out_dir);

// collect: run the pull loop + final harvest against a server URL.
void run_collect(const nlohmann::json& config, const std::string& server_url,
                 const std::filesystem::path& out_dir, bool virtual_clock);

// bins/embed: analysis outputs for a dataset directory.
void run_bins(const std::filesystem::path& dataset_dir,
              const std::filesystem::path& out_dir, const AnalysisOptions& opt);
void run_embed(const std::filesystem::path& dataset_dir,
               const std::filesystem::path& out_dir, const AnalysisOptions& opt);

// eval: completeness, recall and detection against the generating world.
void run_eval(const std::filesystem::path& dataset_dir,
              const std::filesystem::path& world_dir,
              const std::filesystem::path& out_dir, const EvalOptions& opt,
              const AnalysisOptions& aopt);

// pipeline: world -> in-process server (virtual clock) -> collector ->
// datastore -> analysis -> eval -> report, all under out_dir. Deterministic:
// same config, same bytes. crash_after_pulls > 0 aborts after that many
// pulls with a resumable error; rerunning the same call resumes.
void run_pipeline(const nlohmann::json& run_config, const std::filesystem::path& out_dir,
                  std::int64_t crash_after_pulls = 0);

// report: one summary document for a pipeline run directory.
nlohmann::json run_report(const std::filesystem::path& run_dir);

}  // namespace lw::pipeline
