#include "tds/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tds {
namespace {

constexpr double kInvGolden = 0.6180339887498949;  // (sqrt(5)-1)/2

SolveStatus status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "near_optimal") return SolveStatus::near_optimal;
  if (s == "infeasible") return SolveStatus::infeasible;
  if (s == "unbounded") return SolveStatus::unbounded;
  return SolveStatus::failure;
}

bool usable(const BoundValue& b) {
  return (b.status == SolveStatus::optimal || b.status == SolveStatus::near_optimal) &&
         std::isfinite(b.value);
}

// An unbounded program is a definitive (if uninformative) outcome: the sample
// falls back to HB without being an error. Failure and infeasible (these
// programs always admit x = 0) indicate the solver gave up.
bool is_failure(const BoundValue& b) {
  return b.status == SolveStatus::failure || b.status == SolveStatus::infeasible;
}

nlohmann::json bound_to_json(const BoundValue& b) {
  nlohmann::json j;
  j["s"] = to_string(b.status);
  if (std::isfinite(b.value)) j["v"] = b.value;
  j["m"] = b.safety_margin;
  return j;
}

BoundValue bound_from_json(const nlohmann::json& j) {
  BoundValue b;
  b.status = status_from_string(j.value("s", std::string("failure")));
  if (j.contains("v") && j.at("v").is_number()) b.value = j.at("v").get<double>();
  b.safety_margin = j.value("m", 0.0);
  return b;
}

std::string sweep_group(int n) { return "bounds_n" + std::to_string(n); }
std::string grid_group(int n) { return "grid_n" + std::to_string(n); }

std::string grid_cache_key(const char* kind, int n, const DistanceTriple& d,
                           const SdpParams& params, const std::string& solver) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s|n=%d|d=%.12f,%.12f,%.12f|plp=%d|psdp=%d|", kind,
                n, d.d1, d.d2, d.d3, params.p_lp, params.p_sdp);
  return std::string(buf) + solver;
}

// Sign-safe harmonic bound for sweep samples: when a Gegenbauer coefficient
// sits inside the sign tolerance its space may or may not contribute, so the
// inclusive count is the only certified upper bound at that sample.
std::int64_t safe_hb(int n, const DistanceTriple& d) {
  HarmonicBound hb = harmonic_bound(n, d);
  return hb.ambiguous ? hb.value_with_ambiguous : hb.value;
}

BoundValue solve_at(bool lp, int n, const DistanceTriple& d, const SweepConfig& cfg) {
  ConicProgram p = lp ? build_delsarte_lp(n, d, cfg.params.p_lp)
                      : build_sdp_primal(n, d, cfg.params);
  return solve_bound(p, cfg.solver);
}

// One program at a K-triple sample, routed through the cache when configured.
BoundValue eval_bound(bool lp, int n, const KTriple& k, double d3,
                      const DistanceTriple& dist, const SweepConfig& cfg) {
  std::string key;
  if (cfg.cache && cfg.cache->enabled()) {
    key = bound_cache_key(lp ? "lp" : "sdp", n, k, d3, cfg.params, solver_info(cfg.solver));
    if (auto hit = cfg.cache->lookup(sweep_group(n), key)) return bound_from_json(*hit);
  }
  BoundValue b = solve_at(lp, n, dist, cfg);
  if (!key.empty()) cfg.cache->store(sweep_group(n), key, bound_to_json(b));
  return b;
}

void check_sweep_inputs(int n, const SweepConfig& cfg) {
  if (n < 3) throw std::invalid_argument("sweep: dimension must be at least 3");
  if (!(cfg.step > 0.0 && cfg.step < 1.0))
    throw std::invalid_argument("sweep: d3 step must lie in (0,1)");
  if (!(cfg.refine_step > 0.0))
    throw std::invalid_argument("sweep: refinement step must be positive");
}

// Golden-section ascent on one bound curve inside [lo,hi]; out-of-domain or
// failed samples, and samples outside the HB-above-ceiling window, count as
// -inf, and the best evaluated point is kept, so the result can never fall
// below the grid seed.
CurveExtremum refine_maximum(bool lp, int n, const KTriple& k, double lo, double hi,
                             CurveExtremum seed, std::int64_t ceiling,
                             const SweepConfig& cfg) {
  auto eval = [&](double d3) -> double {
    std::optional<DistanceTriple> dist = recover_distances(k, d3);
    if (!dist || safe_hb(n, *dist) <= ceiling)
      return -std::numeric_limits<double>::infinity();
    BoundValue b = eval_bound(lp, n, k, d3, *dist, cfg);
    return usable(b) ? b.value : -std::numeric_limits<double>::infinity();
  };
  CurveExtremum best = seed;
  auto note = [&](double d3, double v) {
    if (v > best.value) best = CurveExtremum{d3, v};
  };
  double a = lo, b = hi;
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  note(x1, f1);
  note(x2, f2);
  while (b - a > cfg.refine_step) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = eval(x2);
      note(x2, f2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = eval(x1);
      note(x1, f1);
    }
  }
  return best;
}

// Maximum of one curve over the samples where HB exceeds its ceiling (the
// windows the program alone must cap; where HB sits at the ceiling,
// min(program, HB) is pinned by HB and the program's value carries no
// information). Interior local maxima are refined below grid resolution; a
// window edge where the curve is still rising is a boundary point, not a
// local maximum, and enters at grid resolution.
CurveExtremum refine_curve(bool lp, int n, const KTriple& k,
                           const std::vector<BoundRecord>& records,
                           std::int64_t ceiling, const SweepConfig& cfg) {
  struct Pt {
    double d3, value;
  };
  std::vector<Pt> pts;
  pts.reserve(records.size());
  for (const BoundRecord& r : records) {
    const BoundValue* b = lp ? (r.lp ? &*r.lp : nullptr) : &r.sdp;
    if (r.hb > ceiling && b && usable(*b)) pts.push_back({r.d3, b->value});
  }
  if (pts.empty()) return {};
  const std::size_t m = pts.size();
  CurveExtremum best{pts[0].d3, pts[0].value};
  for (const Pt& p : pts)
    if (p.value > best.value) best = CurveExtremum{p.d3, p.value};
  for (std::size_t i = 1; i + 1 < m; ++i) {
    // contiguous neighbors on both sides: window-interior point
    if (pts[i].d3 - pts[i - 1].d3 > 1.5 * cfg.step) continue;
    if (pts[i + 1].d3 - pts[i].d3 > 1.5 * cfg.step) continue;
    bool rising = pts[i].value > pts[i - 1].value;
    bool falling = pts[i].value >= pts[i + 1].value;
    if (!(rising && falling)) continue;  // first point of each plateau
    CurveExtremum local =
        refine_maximum(lp, n, k, pts[i - 1].d3, pts[i + 1].d3,
                       CurveExtremum{pts[i].d3, pts[i].value}, ceiling, cfg);
    if (local.value > best.value) best = local;
  }
  return best;
}

std::vector<double> d3_grid(const SweepConfig& cfg) {
  std::vector<double> grid;
  for (int i = 1;; ++i) {
    double d3 = i * cfg.step;
    if (d3 >= 1.0 - 1e-12) break;
    grid.push_back(d3);
  }
  return grid;
}

std::int64_t floor_bound(const BoundValue& b, std::int64_t hb) {
  if (!usable(b)) return hb;  // harmonic bound alone covers the sample
  return std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(b.value)), hb);
}

struct Sample {
  double d3 = 0.0;
  DistanceTriple dist;
  std::int64_t hb = 0;
};

// In-domain samples ordered by descending HB (ties by ascending d3), which
// lets per-triple aggregation skip every sample whose HB cannot raise the
// running maximum: min(sdp, hb) <= hb, so only hb > current max needs a solve.
std::vector<Sample> samples_by_hb(int n, const KTriple& k, const SweepConfig& cfg) {
  std::vector<Sample> samples;
  for (double d3 : d3_grid(cfg)) {
    std::optional<DistanceTriple> dist = recover_distances(k, d3);
    if (!dist) continue;
    samples.push_back({d3, *dist, safe_hb(n, *dist)});
  }
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.hb != b.hb) return a.hb > b.hb;
    return a.d3 < b.d3;
  });
  return samples;
}

}  // namespace

TripleSweep sweep_triple(int n, const KTriple& k, const SweepConfig& config) {
  check_sweep_inputs(n, config);
  if (!k.valid()) throw std::invalid_argument("sweep: invalid K-triple");
  TripleSweep out;
  out.k = k;

  std::vector<double> grid = d3_grid(config);
  std::vector<std::optional<DistanceTriple>> domain(grid.size());
  std::size_t in_domain = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    domain[i] = recover_distances(k, grid[i]);
    if (domain[i]) ++in_domain;
  }
  out.skipped_samples = static_cast<int>(grid.size() - in_domain);
  out.records.resize(in_domain);

  std::vector<std::size_t> slot(grid.size(), 0);
  for (std::size_t i = 0, next = 0; i < grid.size(); ++i)
    if (domain[i]) slot[i] = next++;

  auto fill_record = [&](std::size_t i) {
    const DistanceTriple& dist = *domain[i];
    BoundRecord& r = out.records[slot[i]];
    r.k = k;
    r.d3 = grid[i];
    r.distances = dist;
    r.hb = safe_hb(n, dist);
    r.sdp = eval_bound(false, n, k, grid[i], dist, config);
    if (config.with_lp) r.lp = eval_bound(true, n, k, grid[i], dist, config);
    double b = static_cast<double>(r.hb);
    bool sdp_ok = usable(r.sdp);
    if (sdp_ok) b = std::min(b, r.sdp.value);
    bool lp_ok = !r.lp || usable(*r.lp);
    if (r.lp && lp_ok) b = std::min(b, r.lp->value);
    r.b = b;
    r.flagged = is_failure(r.sdp) || (r.lp && is_failure(*r.lp));
  };

  if (config.workers > 1) {
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
      for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
        if (domain[i]) fill_record(i);
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < config.workers; ++w) pool.emplace_back(drain);
    drain();
    for (std::thread& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (domain[i]) fill_record(i);
  }

  for (const BoundRecord& r : out.records) {
    out.any_failure = out.any_failure || r.flagged;
    bool hb_binding = !usable(r.sdp) || static_cast<double>(r.hb) <= r.sdp.value;
    if (hb_binding) out.hb_ceiling = std::max(out.hb_ceiling, r.hb);
  }
  out.max_sdp = refine_curve(false, n, k, out.records, out.hb_ceiling, config);
  if (config.with_lp)
    out.max_lp = refine_curve(true, n, k, out.records, out.hb_ceiling, config);
  return out;
}

SweepReport dimension_bound(int n, const SweepConfig& config) {
  check_sweep_inputs(n, config);
  SweepReport rep;
  rep.n = n;
  rep.params = config.params;
  rep.step = config.step;
  rep.small_set_floor = nozaki_context(n).small_set_floor();
  rep.overall = rep.small_set_floor;

  for (const KTriple& k : enumerate_k_triples(n)) {
    TripleBound tb;
    tb.k = k;
    std::int64_t cur = 0;
    std::int64_t worst_uncovered = 0;  // max HB over failed solves
    for (const Sample& s : samples_by_hb(n, k, config)) {
      if (s.hb <= cur) {  // min(sdp, hb) <= hb <= cur: cannot raise the max
        ++tb.pruned;
        continue;
      }
      BoundValue b = eval_bound(false, n, k, s.d3, s.dist, config);
      ++tb.solved;
      cur = std::max(cur, floor_bound(b, s.hb));
      bool hb_binding = !usable(b) || static_cast<double>(s.hb) <= b.value;
      if (hb_binding) tb.hb_ceiling = std::max(tb.hb_ceiling, s.hb);
      if (is_failure(b)) {
        ++tb.failures;
        worst_uncovered = std::max(worst_uncovered, s.hb);
      }
    }
    tb.bound = cur;
    // HB folds failed samples into the bound, so this only trips if that
    // folding itself were impossible; it documents the guarantee explicitly.
    tb.rigorous = worst_uncovered <= tb.bound;
    rep.rigorous = rep.rigorous && tb.rigorous;
    rep.overall = std::max(rep.overall, tb.bound);
    rep.triples.push_back(tb);
  }
  return rep;
}

ImprovedTriples improved_triples(int n, const SweepConfig& config) {
  check_sweep_inputs(n, config);
  ImprovedTriples out;
  for (const KTriple& k : enumerate_k_triples(n)) {
    ++out.total;
    std::int64_t sdp_bound = 0, base_bound = 0;  // base: min(LP, HB) per sample
    for (const Sample& s : samples_by_hb(n, k, config)) {
      bool need_sdp = s.hb > sdp_bound;
      bool need_lp = s.hb > base_bound;
      if (!need_sdp && !need_lp) continue;
      if (need_sdp) {
        BoundValue b = eval_bound(false, n, k, s.d3, s.dist, config);
        sdp_bound = std::max(sdp_bound, floor_bound(b, s.hb));
      }
      if (need_lp) {
        BoundValue b = eval_bound(true, n, k, s.d3, s.dist, config);
        base_bound = std::max(base_bound, floor_bound(b, s.hb));
      }
    }
    if (sdp_bound < base_bound) {
      ++out.improved;
      out.triples.push_back(k);
    }
  }
  return out;
}

GridReport grid_sweep_no_nozaki(int n, int parts1, int parts2, int parts3,
                                const SweepConfig& config) {
  if (n < 3) throw std::invalid_argument("grid sweep: dimension must be at least 3");
  if (parts1 < 2 || parts2 < 2 || parts3 < 2)
    throw std::invalid_argument("grid sweep: each axis needs at least 2 parts");
  GridReport rep;
  rep.n = n;
  rep.parts1 = parts1;
  rep.parts2 = parts2;
  rep.parts3 = parts3;

  struct Cell {
    DistanceTriple d;
    std::int64_t hb;
  };
  std::vector<Cell> cells;
  for (int i = 1; i < parts1; ++i) {
    double d1 = -1.0 + i * (2.0 / parts1);
    for (int j = 1; j < parts2; ++j) {
      double d2 = -1.0 + j * (2.0 / parts2);
      if (d2 <= d1) continue;
      for (int l = 1; l < parts3; ++l) {
        double d3 = l * (1.0 / parts3);
        DistanceTriple d{d1, d2, d3};
        if (!d.valid()) continue;
        cells.push_back({d, safe_hb(n, d)});
      }
    }
  }
  rep.cells_valid = static_cast<int>(cells.size());
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.hb > b.hb;  // stable keeps lexicographic cell order within ties
  });

  const std::string solver = solver_info(config.solver);
  for (const Cell& c : cells) {
    if (c.hb <= rep.overall) continue;  // cannot raise the max
    BoundValue b;
    std::string key;
    if (config.cache && config.cache->enabled()) {
      key = grid_cache_key("sdpgrid", n, c.d, config.params, solver);
      if (auto hit = config.cache->lookup(grid_group(n), key)) {
        b = bound_from_json(*hit);
      } else {
        b = solve_at(false, n, c.d, config);
        config.cache->store(grid_group(n), key, bound_to_json(b));
      }
    } else {
      b = solve_at(false, n, c.d, config);
    }
    GridCell solved;
    solved.d1 = c.d.d1;
    solved.d2 = c.d.d2;
    solved.d3 = c.d.d3;
    solved.hb = c.hb;
    solved.sdp = b;
    solved.bound = floor_bound(b, c.hb);
    rep.any_failure = rep.any_failure || is_failure(b);
    rep.solved_cells.push_back(solved);
    if (solved.bound > rep.overall) {
      rep.overall = solved.bound;
      rep.best = solved;
    }
  }
  return rep;
}

CellBounds cell_bounds(int n, const DistanceTriple& d, const SdpParams& params,
                       const SolverSettings& settings) {
  if (!d.valid()) throw std::invalid_argument("cell bounds: invalid distance triple");
  CellBounds out;
  out.hb = safe_hb(n, d);
  out.lp = solve_bound(build_delsarte_lp(n, d, params.p_lp), settings);
  out.sdp = solve_bound(build_sdp_primal(n, d, params), settings);
  return out;
}

}  // namespace tds
