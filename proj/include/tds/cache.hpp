#pragma once

// Append-only JSONL result cache. Each group is one file `<group>.jsonl` in
// the cache directory; every line is {"k": <key>, "v": <value>}. Entries are
// loaded lazily per group, lookups hit the in-memory map, and stores append
// and flush immediately so interrupted runs resume where they stopped.
// Keys embed the solver description string, so results from a solver with
// different tolerances never alias.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "tds/nozaki.hpp"
#include "tds/smatrix.hpp"

namespace tds {

class SolveCache {
 public:
  SolveCache() = default;  // disabled: lookups miss, stores are dropped
  explicit SolveCache(std::filesystem::path dir);

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<nlohmann::json> lookup(const std::string& group, const std::string& key);
  void store(const std::string& group, const std::string& key, const nlohmann::json& value);

 private:
  struct Group {
    bool loaded = false;
    std::map<std::string, nlohmann::json> entries;
    std::ofstream out;
  };
  Group& group_for(const std::string& name);  // caller holds mutex_

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, Group> groups_;
};

// "<kind>|n=<n>|K=<k1>,<k2>,<k3>|d3=<%.12f>|plp=..|psdp=..|<solver info>"
std::string bound_cache_key(const char* kind, int n, const KTriple& k, double d3,
                            const SdpParams& params, const std::string& solver);

}  // namespace tds
