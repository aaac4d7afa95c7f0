#include "likewatch/pipeline.hpp"

#include <fstream>

#include "likewatch/analysis.hpp"
#include "likewatch/api_client.hpp"
#include "likewatch/collector.hpp"
#include "likewatch/datastore.hpp"
#include "likewatch/errors.hpp"
#include "likewatch/evaluate.hpp"
#include "likewatch/fsutil.hpp"
#include "likewatch/world.hpp"

namespace lw::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

AnalysisOptions AnalysisOptions::from_json(const json& j) {
  AnalysisOptions o;
  o.c = j.value("c", o.c);
  o.min_bin_size = j.value("min_bin_size", o.min_bin_size);
  o.histogram_min_size = j.value("histogram_min_size", o.histogram_min_size);
  o.dense_cap = j.value("dense_cap", o.dense_cap);
  o.svg = j.value("svg", o.svg);
  return o;
}

EvalOptions EvalOptions::from_json(const json& j) {
  EvalOptions o;
  o.population = j.value("population", o.population);
  o.detection_min_size = j.value("detection_min_size", o.detection_min_size);
  if (o.population != "final_harvest" && o.population != "all")
    throw ConfigError("eval population must be final_harvest or all");
  return o;
}

void run_simulate(const json& config, const fs::path& out_dir) {
  world::SimConfig sc = world::SimConfig::from_json(config);
  world::WorldTimeline w = world::generate_world(sc);
  w.save(out_dir);
}

namespace {

collect::CollectorParams collector_params(const json& run_config) {
  json cj = run_config.at("collector");
  const json& wj = run_config.at("world");
  // pipeline conveniences: default keyword/startpoint from the world config
  if (!cj.contains("keyword"))
    cj["keyword"] = wj.value("query_tag", world::SimConfig{}.query_tag);
  if (!cj.contains("startpoint"))
    cj["startpoint"] = wj.value("epoch", world::SimConfig{}.epoch);
  return collect::CollectorParams::from_json(cj);
}

struct AnalysisArtifacts {
  analysis::LikeMatrix matrix;
  analysis::BinList bins;
  bool empty = false;
};

AnalysisArtifacts analyze(const data::Dataset& ds) {
  AnalysisArtifacts a;
  if (ds.tweets.empty() || ds.total_likers() == 0) {
    a.empty = true;
    return a;
  }
  a.matrix = analysis::build_matrix(ds);
  a.bins = analysis::bin_users(a.matrix);
  return a;
}

}  // namespace

void run_collect(const json& config, const std::string& server_url,
                 const fs::path& out_dir, bool virtual_clock) {
  collect::CollectorParams params = collect::CollectorParams::from_json(config);
  api::HttpApiClient client(server_url);
  collect::Collector collector(params, client, out_dir, virtual_clock);
  collector.run();
}

void run_bins(const fs::path& dataset_dir, const fs::path& out_dir,
              const AnalysisOptions& opt) {
  data::Dataset ds = data::load_dataset(dataset_dir);
  fs::create_directories(out_dir);
  AnalysisArtifacts a = analyze(ds);
  if (a.empty) {
    atomic_write(out_dir / "bins.csv", "bin_id,size,p_b,member_user_ids\n");
    atomic_write(out_dir / "histogram.csv", "size,bin_count,user_count\n");
    return;
  }
  analysis::write_bins_csv(a.matrix, a.bins, opt.c, out_dir / "bins.csv");
  auto hist = analysis::bin_size_histogram(a.bins, opt.histogram_min_size);
  analysis::write_histogram_csv(hist, out_dir / "histogram.csv");
}

void run_embed(const fs::path& dataset_dir, const fs::path& out_dir,
               const AnalysisOptions& opt) {
  data::Dataset ds = data::load_dataset(dataset_dir);
  fs::create_directories(out_dir);
  AnalysisArtifacts a = analyze(ds);
  if (a.empty) {
    atomic_write(out_dir / "embedding.csv", "user_id,x,y,bin_id,excluded_flag\n");
    return;
  }
  analysis::Embedding emb;
  try {
    emb = analysis::svd_embed(a.matrix);
  } catch (const NumericError&) {
    // degenerate dataset (one tweet, or no column variance): no 2-D
    // structure to embed, emit the header so downstream readers still work
    atomic_write(out_dir / "embedding.csv", "user_id,x,y,bin_id,excluded_flag\n");
    return;
  }
  analysis::write_embedding_csv(a.matrix, a.bins, emb, out_dir / "embedding.csv");
  if (opt.svg) analysis::write_embedding_svg(a.matrix, a.bins, emb, out_dir / "embedding.svg");
}

void run_eval(const fs::path& dataset_dir, const fs::path& world_dir,
              const fs::path& out_dir, const EvalOptions& opt,
              const AnalysisOptions& aopt) {
  data::Dataset ds = data::load_dataset(dataset_dir);
  world::WorldTimeline w = world::WorldTimeline::load(world_dir);
  fs::create_directories(out_dir);

  auto pop = opt.population == "all" ? eval::Population::all
                                     : eval::Population::final_harvest;
  eval::write_completeness_csv(eval::completeness(ds, pop), out_dir / "completeness.csv");
  eval::write_recall_csv(eval::ground_truth_recall(ds, w), out_dir / "recall.csv");

  AnalysisArtifacts a = analyze(ds);
  eval::DetectionReport det;
  if (!a.empty) {
    det = eval::detection_metrics(a.matrix, a.bins, w.ground_truth,
                                  opt.detection_min_size);
  } else {
    det.min_size = opt.detection_min_size;
    det.recall = 1.0;
    det.precision = 1.0;
  }
  (void)aopt;
  eval::write_detection_json(det, out_dir / "detection.json");
}

void run_pipeline(const json& run_config, const fs::path& out_dir,
                  std::int64_t crash_after_pulls) {
  if (run_config.value("clock", "virtual") != std::string("virtual"))
    throw ConfigError("pipeline runs on the virtual clock only");
  fs::create_directories(out_dir);

  // world: generate once, reload on resume
  fs::path world_dir = out_dir / "world";
  world::WorldTimeline w;
  if (fs::exists(world_dir / "world.json")) {
    w = world::WorldTimeline::load(world_dir);
  } else {
    w = world::generate_world(world::SimConfig::from_json(run_config.at("world")));
    w.save(world_dir);
  }

  collect::CollectorParams params = collector_params(run_config);

  fs::path dataset_dir = out_dir / "dataset";
  bool collected = false;
  if (fs::exists(dataset_dir / "manifest.json")) {
    json manifest = json::parse(read_file(dataset_dir / "manifest.json"));
    collected = manifest.value("completed", false);
  }
  if (!collected) {
    api::ServerConfig sconf;
    sconf.tokens = params.tokens;
    sconf.rate_limit = params.req_rate_lim;
    auto core = std::make_shared<api::SimServerCore>(w, sconf, params.startpoint);
    fs::create_directories(dataset_dir);
    std::ofstream audit(dataset_dir / "audit.jsonl", std::ios::app);
    core->set_audit_sink([&audit](const api::AuditRecord& r) {
      audit << r.to_line() << '\n';
      audit.flush();
    });
    api::LocalApiClient client(core);
    collect::Collector collector(params, client, dataset_dir, /*virtual_clock=*/true);
    collector.run(crash_after_pulls);
  }

  data::Dataset ds = data::load_dataset(dataset_dir);
  data::write_merged(ds, dataset_dir / "dataset.jsonl");

  AnalysisOptions aopt = AnalysisOptions::from_json(run_config.value("analysis", json::object()));
  EvalOptions eopt = EvalOptions::from_json(run_config.value("eval", json::object()));

  run_bins(dataset_dir, out_dir / "analysis", aopt);
  run_embed(dataset_dir, out_dir / "analysis", aopt);
  run_eval(dataset_dir, world_dir, out_dir / "eval", eopt, aopt);

  atomic_write(out_dir / "report.json", run_report(out_dir).dump(2) + "\n");
}

json run_report(const fs::path& run_dir) {
  json rep;
  fs::path dataset_dir = fs::exists(run_dir / "dataset" / "manifest.json")
                             ? run_dir / "dataset"
                             : run_dir;  // also accept a bare dataset directory
  json counts;
  counts["tweets"] = 0;
  counts["users"] = 0;
  counts["bins"] = 0;
  counts["singleton_fraction"] = 0.0;
  counts["pull_count"] = 0;
  rep["histogram"] = json::array();
  rep["large_bins"] = json::array();
  rep["completeness"] = json::object();
  rep["detection"] = json::object();
  rep["recall"] = json::object();

  if (!fs::exists(dataset_dir / "manifest.json")) {
    rep["counts"] = counts;
    return rep;  // nothing collected yet: zeroed sections
  }
  json manifest = json::parse(read_file(dataset_dir / "manifest.json"));
  counts["pull_count"] = manifest.value("pull_count", 0);

  data::Dataset ds = data::load_dataset(dataset_dir);
  counts["tweets"] = ds.tweets.size();
  counts["users"] = ds.total_likers();

  AnalysisArtifacts a = analyze(ds);
  const double c = AnalysisOptions{}.c;
  const std::uint64_t min_bin_size = AnalysisOptions{}.min_bin_size;
  if (!a.empty) {
    counts["bins"] = a.bins.bins.size();
    std::size_t singles = 0;
    for (const auto& b : a.bins.bins)
      if (b.size() == 1) ++singles;
    counts["singleton_fraction"] =
        static_cast<double>(singles) / static_cast<double>(a.bins.bins.size());
    json hist = json::array();
    for (const auto& r : analysis::bin_size_histogram(a.bins, 1))
      hist.push_back(json{{"size", r.size}, {"bin_count", r.bin_count},
                          {"user_count", r.user_count}});
    rep["histogram"] = hist;
    json large = json::array();
    auto order = a.bins.report_order();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      std::size_t sz = a.bins.bins[order[rank]].size();
      if (sz < min_bin_size) break;
      large.push_back(json{{"bin_id", rank},
                           {"size", sz},
                           {"p_b", analysis::coordination_probability(sz, c)}});
    }
    rep["large_bins"] = large;
  }

  auto comp = eval::completeness(ds);
  json cj;
  cj["tweet_count"] = comp.summary.tweet_count;
  cj["fraction_exact"] = comp.summary.fraction_exact;
  cj["fraction_within_10pct"] = comp.summary.fraction_within_10pct;
  cj["fraction_within_10_likes"] = comp.summary.fraction_within_10_likes;
  cj["fraction_negative_within_10pct"] = comp.summary.fraction_negative_within_10pct;
  cj["fraction_positive_within_10pct"] = comp.summary.fraction_positive_within_10pct;
  rep["completeness"] = cj;

  fs::path world_dir = run_dir / "world";
  if (fs::exists(world_dir / "world.json")) {
    world::WorldTimeline w = world::WorldTimeline::load(world_dir);
    auto rec = eval::ground_truth_recall(ds, w);
    rep["recall"] = json{{"overall", rec.overall}, {"vacuous", rec.vacuous}};
    if (!a.empty) {
      auto det = eval::detection_metrics(a.matrix, a.bins, w.ground_truth, min_bin_size);
      json dj;
      dj["recall"] = det.recall;
      dj["precision"] = det.precision;
      dj["large_bins"] = det.large_bins;
      rep["detection"] = dj;
    }
  }
  rep["counts"] = counts;
  return rep;
}

}  // namespace lw::pipeline
