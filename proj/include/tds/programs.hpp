#pragma once

// Builders for the two pointwise bound programs at a fixed inner-product
// triple: the pair-distribution LP (maximize 1 + x1 + x2 + x3 under pointwise
// Gegenbauer positivity rows) and the 13-variable three-point SDP (objective
// 1 + (x1+x2+x3)/3 with moment-matrix constraints), plus the helper that
// turns a solver report into a bound with an explicit safety margin.

#include <array>
#include <limits>

#include "tds/conic.hpp"
#include "tds/harmonic.hpp"
#include "tds/smatrix.hpp"
#include "tds/solver.hpp"

namespace tds {

struct BoundValue {
  double value = std::numeric_limits<double>::quiet_NaN();  // finite only for optimal/near-optimal
  SolveStatus status = SolveStatus::failure;
  double safety_margin = 0.0;  // already included in value
};

// Memoized Gegenbauer evaluation; keys are (n, k, t) with t snapped to a
// 1e-15 grid so sweep samples reuse values deterministically.
double gegenbauer_cached(int n, int k, double t);

// (u, v, t) arguments of the 13 moment-matrix coefficient slots: variables
// 1..3 are the pair slots (d_j, d_j, 1), variables 4..13 the triangle slots
// (d_a, d_b, d_c) over the ten unordered index patterns.
std::array<std::array<double, 3>, 13> sdp_matrix_arguments(const DistanceTriple& d);

ConicProgram build_delsarte_lp(int n, const DistanceTriple& d, int p_lp);
ConicProgram build_sdp_primal(int n, const DistanceTriple& d, const SdpParams& params);

// Solve and convert to a valid upper bound: objective plus
// 10 * (duality gap + max constraint violation). The margin makes the
// reported value safe to floor when drawing integer-cardinality conclusions.
BoundValue solve_bound(const ConicProgram& p, const SolverSettings& settings = {});

}  // namespace tds
