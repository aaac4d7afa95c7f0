#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "likewatch/timeutil.hpp"

namespace lw::data {

using Id = std::uint64_t;

struct LikerSeen {
  Id user_id = 0;
  Time first_seen = 0;  // earliest pull timestamp the liker appeared at
};

struct TweetData {
  Time created_at = 0;
  std::int64_t max_like_count = 0;     // Alg. 2 merge rule: max over snapshots
  std::int64_t max_retweet_count = 0;
  bool in_final_harvest = false;
  bool observed = false;  // appeared in at least one T_t snapshot
  std::vector<LikerSeen> likers;  // union over all L_t and L_final, by user_id
};

struct Dataset {
  std::map<Id, TweetData> tweets;

  std::size_t total_likers() const;
};

struct ValidationReport {
  struct Row {
    Id tweet_id;
    std::int64_t max_like_count;
    std::int64_t collected_likers;
  };
  std::vector<Row> per_tweet;
  std::vector<Id> orphan_tweet_ids;  // liker rows whose tweet never appears in any T_t
  std::size_t duplicate_liker_rows = 0;
};

// Loads a collector dataset directory (tweets_*.jsonl, likers_*.jsonl,
// likers_final.jsonl, manifest.json) into the canonical merged form.
Dataset load_dataset(const std::filesystem::path& dir);

ValidationReport validate(const Dataset& dataset);

// Canonical merged single-file form, one tweet per line.
void write_merged(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_merged(const std::filesystem::path& path);

}  // namespace lw::data
