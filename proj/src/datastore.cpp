#include "likewatch/datastore.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"
#include "likewatch/vendor_json.hpp"

namespace lw::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t Dataset::total_likers() const {
  std::set<Id> users;
  for (const auto& [id, t] : tweets)
    for (const auto& l : t.likers) users.insert(l.user_id);
  return users.size();
}

namespace {

void merge_liker_file(Dataset& ds, const fs::path& path, bool final_harvest,
                      std::map<Id, std::map<Id, Time>>& first_seen) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("corrupt liker row " + path.string() + ":" + std::to_string(lineno) +
                    ": " + e.what());
    }
    Id tweet_id = j.at("tweet_id").get<Id>();
    Time pulled_at = j.at("pulled_at").get<Time>();
    auto& seen = first_seen[tweet_id];
    for (Id user : j.at("liker_ids").get<std::vector<Id>>()) {
      auto it = seen.find(user);
      if (it == seen.end() || pulled_at < it->second) seen[user] = pulled_at;
    }
    auto& t = ds.tweets[tweet_id];
    if (final_harvest) t.in_final_harvest = true;
  }
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw IoError("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest.json: " + std::string(e.what()));
  }
  if (manifest.value("schema_version", 0) != 1)
    throw ConfigError("unsupported dataset schema version in " + manifest_path.string());

  Dataset ds;
  for (const fs::path& p : list_files(dir, "tweets_", ".jsonl")) {
    std::istringstream in(read_file(p));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw IoError("corrupt tweet row " + p.string() + ":" + std::to_string(lineno) +
                      ": " + e.what());
      }
      Id id = j.at("id").get<Id>();
      Time created = j.at("created_at").get<Time>();
      auto& t = ds.tweets[id];
      if (t.observed && t.created_at != created)
        throw IoError("tweet " + std::to_string(id) +
                      " has inconsistent created_at across snapshots (" + p.string() + ")");
      t.observed = true;
      t.created_at = created;
      t.max_like_count =
          std::max(t.max_like_count, j.at("like_count").get<std::int64_t>());
      t.max_retweet_count =
          std::max(t.max_retweet_count, j.at("retweet_count").get<std::int64_t>());
    }
  }

  std::map<Id, std::map<Id, Time>> first_seen;
  for (const fs::path& p : list_files(dir, "likers_", ".jsonl")) {
    bool is_final = p.filename() == "likers_final.jsonl";
    merge_liker_file(ds, p, is_final, first_seen);
  }
  for (auto& [tweet_id, seen] : first_seen) {
    auto& t = ds.tweets[tweet_id];
    for (const auto& [user, ts] : seen) t.likers.push_back({user, ts});
    // std::map iteration gives user_id ascending already
  }
  return ds;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport rep;
  for (const auto& [id, t] : dataset.tweets) {
    if (!t.observed) {
      rep.orphan_tweet_ids.push_back(id);
      continue;
    }
    rep.per_tweet.push_back(
        {id, t.max_like_count, static_cast<std::int64_t>(t.likers.size())});
    std::set<Id> uniq;
    for (const auto& l : t.likers)
      if (!uniq.insert(l.user_id).second) rep.duplicate_liker_rows++;
  }
  return rep;
}

void write_merged(const Dataset& dataset, const fs::path& path) {
  std::string out;
  for (const auto& [id, t] : dataset.tweets) {
    json j;
    j["tweet_id"] = id;
    j["created_at"] = t.created_at;
    j["like_count_max"] = t.max_like_count;
    j["retweet_count_max"] = t.max_retweet_count;
    j["in_final_harvest"] = t.in_final_harvest;
    j["observed"] = t.observed;
    json likers = json::array();
    for (const auto& l : t.likers)
      likers.push_back(json{{"id", l.user_id}, {"first_seen", l.first_seen}});
    j["likers"] = likers;
    out += j.dump();
    out += '\n';
  }
  atomic_write(path, out);
}

Dataset load_merged(const fs::path& path) {
  Dataset ds;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TweetData t;
    t.created_at = j.at("created_at").get<Time>();
    t.max_like_count = j.at("like_count_max").get<std::int64_t>();
    t.max_retweet_count = j.at("retweet_count_max").get<std::int64_t>();
    t.in_final_harvest = j.at("in_final_harvest").get<bool>();
    t.observed = j.at("observed").get<bool>();
    for (const json& lj : j.at("likers"))
      t.likers.push_back({lj.at("id").get<Id>(), lj.at("first_seen").get<Time>()});
    ds.tweets.emplace(j.at("tweet_id").get<Id>(), std::move(t));
  }
  return ds;
}

}  // namespace lw::data
