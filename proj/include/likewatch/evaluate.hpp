#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "likewatch/analysis.hpp"
#include "likewatch/datastore.hpp"
#include "likewatch/world.hpp"

namespace lw::eval {

using Id = std::uint64_t;

enum class Population { final_harvest, all };  // which tweets enter completeness

struct CompletenessRow {
  Id tweet_id = 0;
  std::int64_t max_like_count = 0;
  std::int64_t collected_likers = 0;
  double missed_share = 0;  // (max - collected) / max; negative = over-collection
};

struct CompletenessSummary {
  std::size_t tweet_count = 0;
  double fraction_exact = 0;
  double fraction_within_10pct = 0;           // -0.1 <= missed_share <= 0.1
  double fraction_within_10_likes = 0;        // |max - collected| <= 10
  double fraction_negative_within_10pct = 0;  // missed_share >= -0.1
  double fraction_positive_within_10pct = 0;  // missed_share <= 0.1
};

struct CompletenessReport {
  std::vector<CompletenessRow> rows;  // sorted by like count ascending
  CompletenessSummary summary;
};

CompletenessReport completeness(const data::Dataset& dataset,
                                Population population = Population::final_harvest);

struct RecallRow {
  Id tweet_id = 0;
  std::size_t true_likers = 0;
  std::size_t collected_true = 0;  // |collected ∩ true|
  double recall = 0;
};

struct RecallReport {
  std::vector<RecallRow> per_tweet;
  double overall = 0;       // micro-average over like events
  bool vacuous = false;     // empty ground truth: reported as 1.0 by convention
};

RecallReport ground_truth_recall(const data::Dataset& dataset,
                                 const world::WorldTimeline& timeline);

struct GroupResult {
  std::string group_id;
  std::uint64_t group_size = 0;
  std::optional<std::size_t> matched_bin;  // report-order bin id
  bool exact_match = false;
  double jaccard = 0;
};

struct DetectionReport {
  std::vector<GroupResult> groups;
  double recall = 0;     // recovered groups / groups
  double precision = 0;  // bins >= min_size matching some group / bins >= min_size
  std::size_t large_bins = 0;
  std::uint64_t min_size = 0;
};

DetectionReport detection_metrics(const analysis::LikeMatrix& matrix,
                                  const analysis::BinList& bins,
                                  const std::map<std::string, std::set<Id>>& ground_truth,
                                  std::uint64_t min_size);

void write_completeness_csv(const CompletenessReport& rep,
                            const std::filesystem::path& path);
void write_recall_csv(const RecallReport& rep, const std::filesystem::path& path);
void write_detection_json(const DetectionReport& rep, const std::filesystem::path& path);

}  // namespace lw::eval
