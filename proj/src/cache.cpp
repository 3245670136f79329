#include "tds/cache.hpp"

#include <cstdio>
#include <stdexcept>

namespace tds {

SolveCache::SolveCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

SolveCache::Group& SolveCache::group_for(const std::string& name) {
  Group& g = groups_[name];
  if (!g.loaded) {
    const auto path = dir_ / (name + ".jsonl");
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
      if (row.is_discarded() || !row.contains("k") || !row.contains("v"))
        continue;  // torn tail line from an interrupted run
      g.entries[row["k"].get<std::string>()] = row["v"];
    }
    g.out.open(path, std::ios::app);
    g.loaded = true;
  }
  return g;
}

std::optional<nlohmann::json> SolveCache::lookup(const std::string& group, const std::string& key) {
  if (!enabled()) return std::nullopt;
  std::lock_guard<std::mutex> lock(mutex_);
  Group& g = group_for(group);
  const auto it = g.entries.find(key);
  if (it == g.entries.end()) return std::nullopt;
  return it->second;
}

void SolveCache::store(const std::string& group, const std::string& key,
                       const nlohmann::json& value) {
  if (!enabled()) return;
  std::lock_guard<std::mutex> lock(mutex_);
  Group& g = group_for(group);
  if (g.entries.count(key)) return;  // first write wins; keys are deterministic
  g.entries[key] = value;
  nlohmann::json row;
  row["k"] = key;
  row["v"] = value;
  g.out << row.dump() << '\n';
  g.out.flush();
}

std::string bound_cache_key(const char* kind, int n, const KTriple& k, double d3,
                            const SdpParams& params, const std::string& solver) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s|n=%d|K=%d,%d,%d|d3=%.12f|plp=%d|psdp=%d|", kind, n, k.k1,
                k.k2, k.k3, d3, params.p_lp, params.p_sdp);
  return std::string(buf) + solver;
}

}  // namespace tds
