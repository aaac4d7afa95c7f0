#include "likewatch/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"
#include "likewatch/vendor_json.hpp"

namespace lw::eval {

namespace fs = std::filesystem;
using nlohmann::json;

CompletenessReport completeness(const data::Dataset& dataset, Population population) {
  CompletenessReport rep;
  for (const auto& [id, t] : dataset.tweets) {
    if (!t.observed) continue;
    if (population == Population::final_harvest && !t.in_final_harvest) continue;
    if (t.max_like_count < 1) continue;  // share undefined at zero likes
    CompletenessRow row;
    row.tweet_id = id;
    row.max_like_count = t.max_like_count;
    row.collected_likers = static_cast<std::int64_t>(t.likers.size());
    row.missed_share = static_cast<double>(row.max_like_count - row.collected_likers) /
                       static_cast<double>(row.max_like_count);
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.max_like_count, a.tweet_id) < std::tie(b.max_like_count, b.tweet_id);
  });

  auto& s = rep.summary;
  s.tweet_count = rep.rows.size();
  if (s.tweet_count == 0) return rep;
  double n = static_cast<double>(s.tweet_count);
  std::size_t exact = 0, within_pct = 0, within_abs = 0, neg_ok = 0, pos_ok = 0;
  for (const auto& r : rep.rows) {
    if (r.collected_likers == r.max_like_count) ++exact;
    if (r.missed_share >= -0.1 && r.missed_share <= 0.1) ++within_pct;
    if (std::abs(r.max_like_count - r.collected_likers) <= 10) ++within_abs;
    if (r.missed_share >= -0.1) ++neg_ok;
    if (r.missed_share <= 0.1) ++pos_ok;
  }
  s.fraction_exact = exact / n;
  s.fraction_within_10pct = within_pct / n;
  s.fraction_within_10_likes = within_abs / n;
  s.fraction_negative_within_10pct = neg_ok / n;
  s.fraction_positive_within_10pct = pos_ok / n;
  return rep;
}

RecallReport ground_truth_recall(const data::Dataset& dataset,
                                 const world::WorldTimeline& timeline) {
  RecallReport rep;
  std::unordered_map<Id, std::unordered_set<Id>> truth;
  for (const auto& e : timeline.events)
    if (e.kind == world::EventKind::like) truth[e.tweet_id].insert(e.user_id);

  std::size_t total_true = 0, total_hit = 0;
  for (const auto& tw : timeline.tweets) {
    auto it = truth.find(tw.id);
    if (it == truth.end()) continue;
    RecallRow row;
    row.tweet_id = tw.id;
    row.true_likers = it->second.size();
    auto dit = dataset.tweets.find(tw.id);
    if (dit != dataset.tweets.end())
      for (const auto& l : dit->second.likers)
        if (it->second.count(l.user_id)) ++row.collected_true;
    row.recall = static_cast<double>(row.collected_true) /
                 static_cast<double>(row.true_likers);
    total_true += row.true_likers;
    total_hit += row.collected_true;
    rep.per_tweet.push_back(row);
  }
  for (const auto& [id, t] : dataset.tweets)
    if (t.observed && !truth.count(id) && !timeline.find_tweet(id))
      throw ConfigError("dataset tweet " + std::to_string(id) +
                        " does not exist in the timeline");
  if (total_true == 0) {
    rep.overall = 1.0;
    rep.vacuous = true;
  } else {
    rep.overall = static_cast<double>(total_hit) / static_cast<double>(total_true);
  }
  return rep;
}

DetectionReport detection_metrics(const analysis::LikeMatrix& matrix,
                                  const analysis::BinList& bins,
                                  const std::map<std::string, std::set<Id>>& ground_truth,
                                  std::uint64_t min_size) {
  DetectionReport rep;
  rep.min_size = min_size;

  auto order = bins.report_order();
  std::vector<std::set<Id>> bin_users(order.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    for (std::uint32_t col : bins.bins[order[rank]])
      bin_users[rank].insert(matrix.col_ids[col]);

  std::vector<bool> bin_matched(order.size(), false);
  std::size_t recovered = 0;
  for (const auto& [gid, members] : ground_truth) {
    GroupResult gr;
    gr.group_id = gid;
    gr.group_size = members.size();
    double best_j = -1;
    std::size_t best_bin = 0;
    for (std::size_t b = 0; b < bin_users.size(); ++b) {
      std::size_t inter = 0;
      for (Id u : bin_users[b])
        if (members.count(u)) ++inter;
      if (inter == 0) continue;
      double uni = static_cast<double>(bin_users[b].size() + members.size() - inter);
      double j = static_cast<double>(inter) / uni;
      if (j > best_j) {
        best_j = j;
        best_bin = b;
      }
    }
    if (best_j >= 0) {
      gr.matched_bin = best_bin;
      gr.jaccard = best_j;
      gr.exact_match = bin_users[best_bin] == members;
      bin_matched[best_bin] = true;
      if (gr.exact_match) ++recovered;
    }
    rep.groups.push_back(std::move(gr));
  }
  rep.recall = ground_truth.empty()
                   ? 1.0
                   : static_cast<double>(recovered) / static_cast<double>(ground_truth.size());

  std::size_t large = 0, large_matched = 0;
  for (std::size_t b = 0; b < bin_users.size(); ++b) {
    if (bin_users[b].size() < min_size) continue;
    ++large;
    if (bin_matched[b]) ++large_matched;
  }
  rep.large_bins = large;
  rep.precision = large == 0 ? 1.0 : static_cast<double>(large_matched) /
                                         static_cast<double>(large);
  return rep;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_completeness_csv(const CompletenessReport& rep, const fs::path& path) {
  std::string out = "tweet_id,max_like_count,collected_likers,missed_share\n";
  for (const auto& r : rep.rows)
    out += std::to_string(r.tweet_id) + "," + std::to_string(r.max_like_count) + "," +
           std::to_string(r.collected_likers) + "," + fmt_double(r.missed_share) + "\n";
  atomic_write(path, out);
}

void write_recall_csv(const RecallReport& rep, const fs::path& path) {
  std::string out = "tweet_id,true_likers,collected_true,recall\n";
  for (const auto& r : rep.per_tweet)
    out += std::to_string(r.tweet_id) + "," + std::to_string(r.true_likers) + "," +
           std::to_string(r.collected_true) + "," + fmt_double(r.recall) + "\n";
  atomic_write(path, out);
}

void write_detection_json(const DetectionReport& rep, const fs::path& path) {
  json j;
  j["min_size"] = rep.min_size;
  j["recall"] = rep.recall;
  j["precision"] = rep.precision;
  j["large_bins"] = rep.large_bins;
  json groups = json::array();
  for (const auto& g : rep.groups) {
    json gj;
    gj["group_id"] = g.group_id;
    gj["group_size"] = g.group_size;
    if (g.matched_bin)
      gj["matched_bin"] = *g.matched_bin;
    else
      gj["matched_bin"] = nullptr;
    gj["exact_match"] = g.exact_match;
    gj["jaccard"] = g.jaccard;
    groups.push_back(gj);
  }
  j["groups"] = groups;
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace lw::eval
