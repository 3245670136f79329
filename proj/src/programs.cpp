#include "tds/programs.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>

#include "tds/gegenbauer.hpp"

namespace tds {

namespace {

std::mutex g_geg_mutex;
std::map<std::tuple<int, int, long long>, double> g_geg_cache;

void check_inputs(int n, const DistanceTriple& d) {
  if (n < 2) throw std::invalid_argument("bound program: dimension must be >= 2");
  if (!d.valid()) throw std::invalid_argument("bound program: invalid distance triple");
}

}  // namespace

double gegenbauer_cached(int n, int k, double t) {
  const auto key = std::make_tuple(n, k, std::llround(t * 1e15));
  {
    std::lock_guard<std::mutex> lock(g_geg_mutex);
    const auto it = g_geg_cache.find(key);
    if (it != g_geg_cache.end()) return it->second;
  }
  const double val = gegenbauer_eval({n, k}, t);
  std::lock_guard<std::mutex> lock(g_geg_mutex);
  g_geg_cache.emplace(key, val);
  return val;
}

std::array<std::array<double, 3>, 13> sdp_matrix_arguments(const DistanceTriple& d) {
  const double a = d.d1, b = d.d2, c = d.d3;
  return {{{a, a, 1.0},
           {b, b, 1.0},
           {c, c, 1.0},
           {a, a, a},
           {b, b, b},
           {c, c, c},
           {a, a, b},
           {a, a, c},
           {b, b, a},
           {b, b, c},
           {c, c, a},
           {c, c, b},
           {a, b, c}}};
}

ConicProgram build_delsarte_lp(int n, const DistanceTriple& d, int p_lp) {
  check_inputs(n, d);
  if (p_lp < 1) throw std::invalid_argument("build_delsarte_lp: p_lp must be >= 1");
  ConicProgram p;
  const int x1 = p.add_variable("x1", true);
  const int x2 = p.add_variable("x2", true);
  const int x3 = p.add_variable("x3", true);
  p.set_objective(Sense::Maximize, 1.0, {{x1, 1.0}, {x2, 1.0}, {x3, 1.0}});
  const double dj[3] = {d.d1, d.d2, d.d3};
  const int xs[3] = {x1, x2, x3};
  for (int k = 1; k <= p_lp; ++k) {
    LinearRow row;
    row.rel = Relation::GE;
    row.rhs = -1.0;  // 1 + sum_j x_j G_k(d_j) >= 0
    row.name = "lp_row_k" + std::to_string(k);
    for (int j = 0; j < 3; ++j) row.terms.push_back({xs[j], gegenbauer_cached(n, k, dj[j])});
    p.add_row(row);
  }
  return p;
}

ConicProgram build_sdp_primal(int n, const DistanceTriple& d, const SdpParams& params) {
  check_inputs(n, d);
  if (n < 3) throw std::invalid_argument("build_sdp_primal: dimension must be >= 3");
  if (params.p_lp < 1 || params.p_sdp < 0)
    throw std::invalid_argument("build_sdp_primal: invalid truncation parameters");
  ConicProgram p;
  std::array<int, 13> x{};
  for (int i = 0; i < 13; ++i) x[i] = p.add_variable("x" + std::to_string(i + 1), true);
  p.set_objective(Sense::Maximize, 1.0,
                  {{x[0], 1.0 / 3.0}, {x[1], 1.0 / 3.0}, {x[2], 1.0 / 3.0}});

  // 2x2 block tying the pair slots to the triangle slots
  {
    PsdConstraint cst;
    cst.name = "pair_triangle_link";
    cst.constant = Eigen::MatrixXd::Zero(2, 2);
    cst.constant(0, 0) = 1.0;
    Eigen::MatrixXd pair_coef(2, 2), tri_coef(2, 2);
    pair_coef << 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;
    tri_coef << 0.0, 0.0, 0.0, 1.0;
    for (int j = 0; j < 3; ++j) {
      cst.vars.push_back(x[j]);
      cst.coefs.push_back(pair_coef);
    }
    for (int m = 3; m < 13; ++m) {
      cst.vars.push_back(x[m]);
      cst.coefs.push_back(tri_coef);
    }
    p.add_psd(cst);
  }

  // scalar pointwise rows, with the three-point normalization constant 3
  const double dj[3] = {d.d1, d.d2, d.d3};
  for (int k = 1; k <= params.p_lp; ++k) {
    LinearRow row;
    row.rel = Relation::GE;
    row.rhs = -3.0;  // 3 + sum_j x_j G_k(d_j) >= 0
    row.name = "sdp_scalar_k" + std::to_string(k);
    for (int j = 0; j < 3; ++j) row.terms.push_back({x[j], gegenbauer_cached(n, k, dj[j])});
    p.add_row(row);
  }

  // moment-matrix constraints S_k(1,1,1) + sum_m x_m S_k(args_m) >= 0
  const auto args = sdp_matrix_arguments(d);
  for (int k = 0; k <= params.p_sdp; ++k) {
    PsdConstraint cst;
    cst.name = "moment_k" + std::to_string(k);
    cst.constant = s_matrix(n, k, 1.0, 1.0, 1.0, params.p_sdp);
    for (int m = 0; m < 13; ++m) {
      cst.vars.push_back(x[m]);
      cst.coefs.push_back(s_matrix(n, k, args[m][0], args[m][1], args[m][2], params.p_sdp));
    }
    p.add_psd(cst);
  }
  return p;
}

BoundValue solve_bound(const ConicProgram& p, const SolverSettings& settings) {
  BoundValue out;
  const SolverReport rep = solve(p, settings);
  out.status = rep.status;
  if (rep.status == SolveStatus::optimal || rep.status == SolveStatus::near_optimal) {
    out.safety_margin = 10.0 * (rep.gap + std::max(0.0, rep.max_violation));
    out.value = rep.objective + out.safety_margin;
  }
  return out;
}

}  // namespace tds
