#pragma once

// Sweep orchestration: sample d3 over (0,1) for each K-triple, evaluate the
// harmonic bound / LP / SDP at every in-domain sample, combine them into
// per-sample and per-triple bounds, and aggregate dimension-level results.
// Also provides the exploratory dense grid over (d1,d2,d3) that skips the
// integer-invariant reduction entirely (non-rigorous by construction).

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tds/cache.hpp"
#include "tds/nozaki.hpp"
#include "tds/programs.hpp"

namespace tds {

struct SweepConfig {
  double step = 0.001;        // d3 grid step
  double refine_step = 1e-4;  // resolution of local-maximum refinement
  SdpParams params{18, 6};
  SolverSettings solver{};
  bool with_lp = true;  // also solve the LP at every sample
  int workers = 1;      // sample-level worker threads for sweep_triple
  SolveCache* cache = nullptr;
};

struct BoundRecord {
  KTriple k;
  double d3 = 0.0;
  DistanceTriple distances;
  std::int64_t hb = 0;
  std::optional<BoundValue> lp;  // present when the sweep solves LPs
  BoundValue sdp;
  double b = 0.0;        // min over the certified bounds at this sample
  bool flagged = false;  // a solve failed; the record falls back to HB alone
};

struct CurveExtremum {
  double d3 = std::numeric_limits<double>::quiet_NaN();
  double value = std::numeric_limits<double>::quiet_NaN();
};

struct TripleSweep {
  KTriple k;
  std::vector<BoundRecord> records;  // in-domain grid samples, ascending d3
  // Refined maxima over the samples where HB exceeds its ceiling — the
  // windows only the program can cap, which is where the published peak
  // locations live. Elsewhere min(program, HB) is pinned by the HB plateau.
  CurveExtremum max_sdp;
  CurveExtremum max_lp;
  std::int64_t hb_ceiling = 0;  // max HB over samples where HB is the binding bound
  int skipped_samples = 0;      // out-of-domain d3 values
  bool any_failure = false;
};

TripleSweep sweep_triple(int n, const KTriple& k, const SweepConfig& config);

struct TripleBound {
  KTriple k;
  std::int64_t bound = 0;  // max over samples of min(floor(sdp), hb)
  std::int64_t hb_ceiling = 0;
  // false only if a sample had neither a solved program nor an HB within the
  // reported bound; the HB fallback is folded into `bound`, so a false value
  // means the number rests on nothing at that sample.
  bool rigorous = true;
  int solved = 0;    // SDP solves performed
  int pruned = 0;    // samples settled by HB alone
  int failures = 0;  // solves that ended in solver-failure (HB covered them)
};

struct SweepReport {
  int n = 0;
  std::int64_t small_set_floor = 0;  // 2N(S^{n-1}) - 1
  std::vector<TripleBound> triples;
  std::int64_t overall = 0;  // max(per-triple bounds, small-set floor)
  bool rigorous = true;
  SdpParams params{};
  double step = 0.0;
};

SweepReport dimension_bound(int n, const SweepConfig& config);

struct ImprovedTriples {
  int improved = 0;
  int total = 0;
  std::vector<KTriple> triples;  // where the SDP bound beats min(LP bound, HB)
};

ImprovedTriples improved_triples(int n, const SweepConfig& config);

struct GridCell {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  std::int64_t hb = 0;
  BoundValue sdp;
  std::int64_t bound = 0;  // min(floor(sdp), hb)
};

struct GridReport {
  int n = 0;
  int parts1 = 0, parts2 = 0, parts3 = 0;
  std::int64_t overall = 0;
  GridCell best;
  std::vector<GridCell> solved_cells;  // cells whose SDP was actually solved
  int cells_valid = 0;                 // lattice points with d1 < d2 < d3
  bool rigorous = false;               // no inter-sample certificate: exploratory only
  bool any_failure = false;
};

// interior lattice: d1 = -1 + i/parts1*2, d2 likewise, d3 = j/parts3
GridReport grid_sweep_no_nozaki(int n, int parts1, int parts2, int parts3,
                                const SweepConfig& config);

struct CellBounds {
  std::int64_t hb = 0;
  BoundValue lp;
  BoundValue sdp;
};

// all three bounds at one explicit triple (grid CLI and spot checks)
CellBounds cell_bounds(int n, const DistanceTriple& d, const SdpParams& params,
                       const SolverSettings& settings = {});

}  // namespace tds
