#pragma once

// Result-table drivers and canonical result serialization. The drivers are
// thin sequential wrappers over the sweep engine; serialization is canonical
// (sorted keys, fixed number formatting, no timestamps) so identical config
// plus a warm cache reproduces output files byte for byte. Every document
// carries provenance: the solver description, the config hash, and the
// per-row safety margins or rigor flags.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tds/smatrix.hpp"
#include "tds/solver.hpp"
#include "tds/sweep.hpp"

namespace tds {

struct RunConfig {
  SdpParams params{18, 6};        // the defaults everything else is tuned for
  double step = 0.001;            // d3 sweep grid step
  double refine_step = 1e-4;      // local-maximum refinement resolution
  double interval_width = 0.005;  // default certificate piece width
  double width_floor = 1e-3;      // cover bisection floor
  SolverSettings solver{};
  std::string cache_dir;          // empty disables the cache
  std::string format = "json";    // "json" | "csv"
  int workers = 1;
};

nlohmann::json config_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);  // JSON file, schema in README

// Environment overrides applied on top of file/flag values: TDS_CACHE_DIR,
// TDS_FEAS_TOL, TDS_GAP_TOL, TDS_MAX_ITERATIONS, TDS_TIME_LIMIT, TDS_WORKERS.
void apply_env_overrides(RunConfig& cfg);

// Stable content hash (FNV-1a 64, hex) of the canonical config serialization.
std::string config_hash(const RunConfig& cfg);

// Sweep-engine view of the config; `cache` may be null to disable caching.
SweepConfig sweep_config(const RunConfig& cfg, SolveCache* cache);

struct Table2Row {
  int n = 0;
  KTriple k;
  CurveExtremum lp;    // refined LP maximum over the program-bound windows
  CurveExtremum sdp;   // refined SDP maximum over the same windows
  double lp_margin = 0.0;   // solver safety margin re-evaluated at the argmax
  double sdp_margin = 0.0;
  std::int64_t hb_ceiling = 0;
  bool flagged = false;  // some solve in the sweep failed
};

// Sweeps exactly the given (dimension, K-triple) rows.
std::vector<Table2Row> run_table2(const std::vector<std::pair<int, KTriple>>& rows,
                                  const RunConfig& cfg);
// Discovers the rows: for each dimension, the triples where the pointwise SDP
// improves on min(LP, HB), then sweeps those. Much more expensive.
std::vector<Table2Row> run_table2(const std::vector<int>& dims, const RunConfig& cfg);

struct Table4Row {
  int n = 0;
  std::int64_t bound = 0;
  bool rigorous = true;
  std::int64_t small_set_floor = 0;
  int solved = 0;    // programs solved across all triples
  int failures = 0;  // solver failures (covered by the harmonic bound)
};

std::vector<Table4Row> run_table4(const std::vector<int>& dims, const RunConfig& cfg);

nlohmann::json table2_document(const std::vector<Table2Row>& rows, const RunConfig& cfg);
std::string table2_csv(const std::vector<Table2Row>& rows);
nlohmann::json table4_document(const std::vector<Table4Row>& rows, const RunConfig& cfg);
std::string table4_csv(const std::vector<Table4Row>& rows);

// CSV of (d3, lp, sdp, hb) at every in-domain sweep sample of one triple;
// samples where a program failed leave that field empty.
std::string figure1_csv(int n, const KTriple& k, const RunConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tds
