#include "tds/sos.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <utility>

#include "tds/gegenbauer.hpp"
#include "tds/solver.hpp"

namespace tds {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Distinct entries of a symmetric order-m matrix, lower triangle column-major.
int entry_count(int m) { return m * (m + 1) / 2; }

std::vector<std::pair<int, int>> entry_index(int m) {
  std::vector<std::pair<int, int>> out;
  out.reserve(entry_count(m));
  for (int j = 0; j < m; ++j)
    for (int i = j; i < m; ++i) out.emplace_back(i, j);
  return out;
}

// The ten triangle rows, in the fixed order used by reports and JSON:
// (d1,d1,d1), (d2,d2,d2), (d3,d3,d3), then the six two-of-one patterns,
// then the scalene (d1,d2,d3).
constexpr int kTrianglePatterns[10][3] = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {0, 0, 1}, {0, 0, 2},
                                          {1, 1, 0}, {1, 1, 2}, {2, 2, 0}, {2, 2, 1}, {0, 1, 2}};

std::string triangle_row_name(const int* pat) {
  return "triple_" + std::to_string(pat[0] + 1) + std::to_string(pat[1] + 1) +
         std::to_string(pat[2] + 1);
}

double linf(const Polynomial& p) {
  double m = 0.0;
  for (double c : p.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

// p(c + r*xi) expanded in xi; exact affine composition, no interpolation.
Polynomial compose_affine(const Polynomial& p, double c, double r) {
  Polynomial pn = p.normalized();
  return poly_compose_rational(pn, Polynomial({c, r}), Polynomial({1.0}), pn.degree());
}

// (1+t^2)^m * p((t^2-1)/(t^2+1)): pulls "p >= 0 on [-1,1]" back to the whole
// line. The degree bound m is fixed per constraint row so the map stays
// linear across all of the row's coefficient polynomials.
Polynomial line_transform(const Polynomial& p, int m) {
  Polynomial pn = p.normalized();
  if (pn.degree() > m)
    throw std::logic_error("line_transform: polynomial exceeds the row degree bound");
  return poly_compose_rational(pn, Polynomial({-1.0, 0.0, 1.0}), Polynomial({1.0, 0.0, 1.0}), m);
}

// sqrt-binomial weights: the Gram matrix of a degree-d certificate is solved
// for in the basis sqrt(C(d,i)) * t^i, which flattens the binomial hump of
// the transformed coefficients (otherwise the equality rows mix O(1) Gram
// entries with O(C(2d,d)) coefficients and the KKT solves lose precision).
// Plain-basis Q = w w^T .* Q' is a congruence, so PSD-ness carries over.
Eigen::VectorXd gram_basis_weights(int order) {
  Eigen::VectorXd w(order);
  const int d = order - 1;
  double binom = 1.0;
  for (int i = 0; i < order; ++i) {
    w(i) = std::sqrt(binom);
    binom = binom * (d - i) / (i + 1);
  }
  return w;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd psd_clamp(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Sum over the ordered antidiagonal i+j == s of an order-m matrix.
double antidiag_sum(const Eigen::MatrixXd& q, int s) {
  const int m = static_cast<int>(q.rows());
  const int lo = std::max(0, s - (m - 1));
  const int hi = std::min(m - 1, s);
  double sum = 0.0;
  for (int i = lo; i <= hi; ++i) sum += q(i, s - i);
  return sum;
}

// Spread each antidiagonal's mismatch evenly over its cells; this is the
// orthogonal projection onto "X Q X^T matches target coefficientwise" and
// preserves symmetry.
void project_antidiagonals(Eigen::MatrixXd& q, const Polynomial& target) {
  const int m = static_cast<int>(q.rows());
  for (int s = 0; s <= 2 * (m - 1); ++s) {
    const int lo = std::max(0, s - (m - 1));
    const int hi = std::min(m - 1, s);
    const double adj = (target.coeff(s) - antidiag_sum(q, s)) / (hi - lo + 1);
    for (int i = lo; i <= hi; ++i) q(i, s - i) += adj;
  }
}

double antidiag_residual(const Eigen::MatrixXd& q, const Polynomial& target) {
  const int m = static_cast<int>(q.rows());
  const int top = std::max(2 * (m - 1), target.normalized().degree());
  double worst = 0.0;
  for (int s = 0; s <= top; ++s)
    worst = std::max(worst, std::abs(target.coeff(s) - antidiag_sum(q, s)));
  return worst;
}

// Alternating projections (with Dykstra's correction on the PSD side) onto
// PSD ∩ {antidiagonal sums = target}. Ends on the affine side so the
// identity is exact; success means lambda_min cleared the requested floor.
bool dykstra_repair(Eigen::MatrixXd& q, const Polynomial& target, double floor) {
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  for (int iter = 0; iter < 250; ++iter) {
    const Eigen::MatrixXd clamped = psd_clamp(q + corr);
    corr = (q + corr) - clamped;
    q = clamped;
    project_antidiagonals(q, target);
    if (min_eigenvalue(q) >= floor) return true;
  }
  return false;
}

struct RowShape {
  std::string name;
  bool pair = false;
  int m = 0;        // distance index for pair rows
  int pat[3] = {};  // pattern for triangle rows
};

std::vector<RowShape> row_shapes() {
  std::vector<RowShape> shapes;
  for (int m = 0; m < 3; ++m) {
    RowShape s;
    s.name = "pair_d" + std::to_string(m + 1);
    s.pair = true;
    s.m = m;
    shapes.push_back(s);
  }
  for (const auto& pat : kTrianglePatterns) {
    RowShape s;
    s.name = triangle_row_name(pat);
    for (int i = 0; i < 3; ++i) s.pat[i] = pat[i];
    shapes.push_back(s);
  }
  return shapes;
}

SolveStatus status_from_string(const std::string& s) {
  for (SolveStatus st : {SolveStatus::optimal, SolveStatus::near_optimal, SolveStatus::infeasible,
                         SolveStatus::unbounded, SolveStatus::failure})
    if (s == to_string(st)) return st;
  throw std::invalid_argument("unknown solve status: " + s);
}

// Variable layout of the interval program (duals first, then one Gram per
// constraint row).
struct Layout {
  int p_lp = 0, p_sdp = 0;
  int base_beta = 0;                  // b11, b12, b22
  std::vector<int> base_f;            // per k
  std::vector<int> f_order;           // p_sdp - k + 1
  std::vector<int> base_gram;         // per row
  std::vector<int> gram_order;        // transform degree + 1
  int total = 0;
};

Layout make_layout(const SdpParams& params, const std::vector<SosRow>& rows) {
  Layout lay;
  lay.p_lp = params.p_lp;
  lay.p_sdp = params.p_sdp;
  int at = params.p_lp;
  lay.base_beta = at;
  at += 3;
  for (int k = 0; k <= params.p_sdp; ++k) {
    lay.base_f.push_back(at);
    lay.f_order.push_back(params.p_sdp - k + 1);
    at += entry_count(params.p_sdp - k + 1);
  }
  for (const auto& row : rows) {
    lay.base_gram.push_back(at);
    lay.gram_order.push_back(row.transform_degree + 1);
    at += entry_count(row.transform_degree + 1);
  }
  lay.total = at;
  return lay;
}

void add_symmetric_variable_block(ConicProgram& prog, const std::string& name, int base,
                                  int order) {
  PsdConstraint cst;
  cst.name = name;
  cst.constant = Eigen::MatrixXd::Zero(order, order);
  const auto idx = entry_index(order);
  for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
    auto [i, j] = idx[e];
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(order, order);
    basis(i, j) = 1.0;
    basis(j, i) = 1.0;
    cst.vars.push_back(base + e);
    cst.coefs.push_back(basis);
  }
  prog.add_psd(std::move(cst));
}

Eigen::MatrixXd matrix_from_solution(const std::vector<double>& x, int base, int order) {
  Eigen::MatrixXd m(order, order);
  const auto idx = entry_index(order);
  for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
    auto [i, j] = idx[e];
    m(i, j) = x[base + e];
    m(j, i) = x[base + e];
  }
  return m;
}

// Objective pieces shared by the interval and pointwise programs:
// 1 + sum(alpha) + beta_11 + <F_0, S_0(1,1,1)>.
std::vector<LinearTerm> dual_objective_terms(int n, const Layout& lay) {
  std::vector<LinearTerm> terms;
  for (int i = 0; i < lay.p_lp; ++i) terms.push_back({i, 1.0});
  terms.push_back({lay.base_beta, 1.0});
  const Eigen::MatrixXd s0 = s_matrix(n, 0, 1.0, 1.0, 1.0, lay.p_sdp);
  const auto idx = entry_index(lay.f_order[0]);
  for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
    auto [i, j] = idx[e];
    const double w = (i == j) ? 1.0 : 2.0;
    if (s0(i, j) != 0.0) terms.push_back({lay.base_f[0] + e, w * s0(i, j)});
  }
  return terms;
}

double dual_objective_value(int n, const SdpParams& params, const DualVariables& dual) {
  double v = 1.0 + dual.beta(0, 0);
  for (double a : dual.alphas) v += a;
  const Eigen::MatrixXd s0 = s_matrix(n, 0, 1.0, 1.0, 1.0, params.p_sdp);
  v += (dual.F.at(0).array() * s0.array()).sum();
  return v;
}

Polynomial row_slack_poly(const SosRow& row, const DualVariables& dual, double delta) {
  Polynomial expr({0.0});
  for (std::size_t i = 0; i < row.alpha_coef.size(); ++i)
    expr = poly_add(expr, poly_scale(row.alpha_coef[i], dual.alphas.at(i)));
  expr = poly_add(expr, poly_scale(row.beta12_coef, dual.beta(0, 1)));
  expr = poly_add(expr, poly_scale(row.beta22_coef, dual.beta(1, 1)));
  for (std::size_t k = 0; k < row.f_coef.size(); ++k) {
    const auto idx = entry_index(static_cast<int>(dual.F.at(k).rows()));
    for (std::size_t e = 0; e < row.f_coef[k].size(); ++e) {
      auto [i, j] = idx.at(e);
      expr = poly_add(expr, poly_scale(row.f_coef[k][e], dual.F[k](i, j)));
    }
  }
  return poly_sub(Polynomial({row.rhs - delta}), expr);
}

ConicProgram build_interval_program(int n, const std::vector<SosRow>& rows, const Layout& lay) {
  ConicProgram prog;
  for (int i = 0; i < lay.p_lp; ++i) prog.add_variable("alpha" + std::to_string(i + 1), true);
  prog.add_variable("b11", false);
  prog.add_variable("b12", false);
  prog.add_variable("b22", false);
  for (int k = 0; k <= lay.p_sdp; ++k) {
    const auto idx = entry_index(lay.f_order[k]);
    for (auto [i, j] : idx)
      prog.add_variable(
          "f" + std::to_string(k) + "_" + std::to_string(i) + "_" + std::to_string(j), false);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto idx = entry_index(lay.gram_order[r]);
    for (auto [i, j] : idx)
      prog.add_variable(
          "q" + std::to_string(r) + "_" + std::to_string(i) + "_" + std::to_string(j), false);
  }

  prog.set_objective(Sense::Minimize, 1.0, dual_objective_terms(n, lay));

  {
    PsdConstraint beta;
    beta.name = "beta";
    beta.constant = Eigen::MatrixXd::Zero(2, 2);
    beta.vars = {lay.base_beta, lay.base_beta + 1, lay.base_beta + 2};
    Eigen::MatrixXd e00 = Eigen::MatrixXd::Zero(2, 2), e01 = e00, e11 = e00;
    e00(0, 0) = 1.0;
    e01(0, 1) = e01(1, 0) = 1.0;
    e11(1, 1) = 1.0;
    beta.coefs = {e00, e01, e11};
    prog.add_psd(std::move(beta));
  }
  for (int k = 0; k <= lay.p_sdp; ++k)
    add_symmetric_variable_block(prog, "f" + std::to_string(k), lay.base_f[k], lay.f_order[k]);
  for (std::size_t r = 0; r < rows.size(); ++r)
    add_symmetric_variable_block(prog, "gram_" + rows[r].name, lay.base_gram[r],
                                 lay.gram_order[r]);

  // One equality per coefficient of the transformed slack polynomial:
  //   sum_v dual_v * T(coef_v)[s] + antidiag_s(Q) = rhs * T(1)[s].
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const SosRow& row = rows[r];
    const int d = row.transform_degree;
    std::vector<LinearRow> lin(2 * d + 1);

    auto accumulate = [&](int var, const Polynomial& coef_poly) {
      const Polynomial t = line_transform(coef_poly, d);
      for (int s = 0; s <= 2 * d; ++s)
        if (t.coeff(s) != 0.0) lin[s].terms.push_back({var, t.coeff(s)});
    };

    for (std::size_t i = 0; i < row.alpha_coef.size(); ++i)
      accumulate(static_cast<int>(i), row.alpha_coef[i]);
    accumulate(lay.base_beta + 1, row.beta12_coef);
    accumulate(lay.base_beta + 2, row.beta22_coef);
    for (int k = 0; k <= lay.p_sdp; ++k)
      for (std::size_t e = 0; e < row.f_coef[k].size(); ++e)
        accumulate(lay.base_f[k] + static_cast<int>(e), row.f_coef[k][e]);

    const auto idx = entry_index(lay.gram_order[r]);
    const Eigen::VectorXd w = gram_basis_weights(lay.gram_order[r]);
    for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
      auto [i, j] = idx[e];
      lin[i + j].terms.push_back({lay.base_gram[r] + e, (i == j ? 1.0 : 2.0) * w(i) * w(j)});
    }

    const Polynomial rhs_poly = line_transform(Polynomial({row.rhs}), d);
    for (int s = 0; s <= 2 * d; ++s) {
      lin[s].rel = Relation::EQ;
      lin[s].rhs = rhs_poly.coeff(s);
      lin[s].name = row.name + "_t" + std::to_string(s);
      prog.add_row(std::move(lin[s]));
    }
  }
  return prog;
}

// Lambda_min floor used while repairing (stricter than the audit floor so
// the recorded margins have headroom).
double repair_floor(double scale) { return 0.25 * kSosEigenFloor * scale; }

}  // namespace

std::vector<SosRow> sos_rows(int n, const KTriple& k, double a1, double a2,
                             const SdpParams& params) {
  if (!(a1 < a2)) throw std::invalid_argument("sos_rows: need a1 < a2");
  const auto lo = recover_distances(k, a1);
  const auto hi = recover_distances(k, a2);
  if (!lo || !hi)
    throw std::invalid_argument("sos_rows: an interval endpoint has no valid distance triple");

  // The recovered distances are affine in d3 (the square root in the closed
  // form resolves to |d3 - 1| times a constant), so the two endpoint triples
  // pin each distance as mid + half*xi exactly.
  const double lov[3] = {lo->d1, lo->d2, lo->d3};
  const double hiv[3] = {hi->d1, hi->d2, hi->d3};
  double mid[3], half[3];
  for (int i = 0; i < 3; ++i) {
    mid[i] = 0.5 * (lov[i] + hiv[i]);
    half[i] = 0.5 * (hiv[i] - lov[i]);
  }
  {
    const auto probe = recover_distances(k, 0.5 * (a1 + a2));
    if (!probe) throw std::invalid_argument("sos_rows: interval midpoint left the domain");
    const double pv[3] = {probe->d1, probe->d2, probe->d3};
    for (int i = 0; i < 3; ++i)
      if (std::abs(pv[i] - mid[i]) > 1e-9)
        throw std::logic_error("sos_rows: distances are not affine across the interval");
  }

  const int dc = std::max(params.p_lp, 2 * params.p_sdp);
  const int df = 2 * params.p_sdp;
  // Exact-degree interpolation nodes for the moment-matrix entries, plus
  // extras so the residual check can reject any degree-bound violation.
  const std::vector<double> nodes = chebyshev_nodes(df + 6, -1.0, 1.0);

  // One polynomial per distinct entry of S_k(args(xi)), degree <= 2*p_sdp.
  auto entry_polys = [&](auto&& args_at) {
    std::vector<std::vector<std::vector<std::pair<double, double>>>> samples(params.p_sdp + 1);
    for (int kk = 0; kk <= params.p_sdp; ++kk)
      samples[kk].resize(entry_count(params.p_sdp - kk + 1));
    for (double xi : nodes) {
      const std::array<double, 3> a = args_at(xi);
      for (int kk = 0; kk <= params.p_sdp; ++kk) {
        const Eigen::MatrixXd s = s_matrix(n, kk, a[0], a[1], a[2], params.p_sdp);
        const auto idx = entry_index(params.p_sdp - kk + 1);
        for (std::size_t e = 0; e < idx.size(); ++e)
          samples[kk][e].emplace_back(xi, s(idx[e].first, idx[e].second));
      }
    }
    std::vector<std::vector<Polynomial>> polys(params.p_sdp + 1);
    for (int kk = 0; kk <= params.p_sdp; ++kk) {
      const auto idx = entry_index(params.p_sdp - kk + 1);
      for (std::size_t e = 0; e < samples[kk].size(); ++e) {
        Polynomial p = interpolate(samples[kk][e], df, 1e-9);
        // fold the symmetry weight so <F,S> = sum over distinct entries
        if (idx[e].first != idx[e].second) p = poly_scale(p, 2.0);
        polys[kk].push_back(std::move(p));
      }
    }
    return polys;
  };

  std::vector<SosRow> rows;
  for (const RowShape& shape : row_shapes()) {
    SosRow row;
    row.name = shape.name;
    if (shape.pair) {
      row.rhs = -1.0;
      row.transform_degree = dc;
      const double c = mid[shape.m], r = half[shape.m];
      for (int i = 1; i <= params.p_lp; ++i)
        row.alpha_coef.push_back(compose_affine(gegenbauer_coeffs({n, i}), c, r));
      row.beta12_coef = Polynomial({2.0});
      row.beta22_coef = Polynomial({1.0});
      auto polys = entry_polys([&](double xi) {
        const double d = c + r * xi;
        return std::array<double, 3>{d, d, 1.0};
      });
      for (auto& pk : polys)
        for (auto& p : pk) p = poly_scale(p, 3.0);  // pair rows carry the factor 3
      row.f_coef = std::move(polys);
    } else {
      row.rhs = 0.0;
      row.transform_degree = df;
      row.beta12_coef = Polynomial({0.0});
      row.beta22_coef = Polynomial({1.0});
      row.f_coef = entry_polys([&](double xi) {
        return std::array<double, 3>{mid[shape.pat[0]] + half[shape.pat[0]] * xi,
                                     mid[shape.pat[1]] + half[shape.pat[1]] * xi,
                                     mid[shape.pat[2]] + half[shape.pat[2]] * xi};
      });
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double sos_row_value(const SosRow& row, const DualVariables& dual, double xi) {
  double v = 0.0;
  for (std::size_t i = 0; i < row.alpha_coef.size(); ++i)
    v += dual.alphas.at(i) * row.alpha_coef[i].eval(xi);
  v += dual.beta(0, 1) * row.beta12_coef.eval(xi);
  v += dual.beta(1, 1) * row.beta22_coef.eval(xi);
  for (std::size_t k = 0; k < row.f_coef.size(); ++k) {
    const auto idx = entry_index(static_cast<int>(dual.F.at(k).rows()));
    for (std::size_t e = 0; e < row.f_coef[k].size(); ++e)
      v += dual.F[k](idx[e].first, idx[e].second) * row.f_coef[k][e].eval(xi);
  }
  return v;
}

Polynomial interval_transform(const Polynomial& f, double a1, double a2) {
  if (!(a1 < a2)) throw std::invalid_argument("interval_transform: need a1 < a2");
  const Polynomial fn = f.normalized();
  return poly_compose_rational(fn, Polynomial({a1, 0.0, a2}), Polynomial({1.0, 0.0, 1.0}),
                               fn.degree());
}

GramResult gram_verify(const Polynomial& f_plus) {
  const Polynomial f = f_plus.normalized();
  const int deg = f.degree();
  if (deg % 2 != 0)
    throw std::invalid_argument("gram_verify: odd-degree polynomial cannot be a sum of squares");
  const int order = deg / 2 + 1;
  GramResult res;
  res.normalization = std::max(1.0, linf(f));

  // Maximize the uniform eigenvalue shift t with Q - t*I PSD and the
  // antidiagonal sums of Q matching f coefficientwise.
  ConicProgram prog;
  const auto idx = entry_index(order);
  const Eigen::VectorXd w = gram_basis_weights(order);
  for (auto [i, j] : idx)
    prog.add_variable("m_" + std::to_string(i) + "_" + std::to_string(j), false);
  const int t_var = prog.add_variable("t", false);
  prog.set_objective(Sense::Maximize, 0.0, {{t_var, 1.0}});
  add_symmetric_variable_block(prog, "shifted", 0, order);
  for (int s = 0; s <= 2 * (order - 1); ++s) {
    LinearRow row;
    row.rel = Relation::EQ;
    row.rhs = f.coeff(s);
    row.name = "t" + std::to_string(s);
    for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
      auto [i, j] = idx[e];
      if (i + j == s) row.terms.push_back({e, (i == j ? 1.0 : 2.0) * w(i) * w(j)});
    }
    if (s % 2 == 0) row.terms.push_back({t_var, 1.0});
    prog.add_row(std::move(row));
  }

  const SolverReport rep = solve(prog);
  if (rep.solution.empty()) return res;

  Eigen::MatrixXd q = matrix_from_solution(rep.solution, 0, order);
  q = (w * w.transpose()).cwiseProduct(q);  // back to the plain monomial basis
  q.diagonal().array() += rep.solution[t_var];
  project_antidiagonals(q, f);
  res.q = q;
  res.lambda_min = min_eigenvalue(q) / res.normalization;
  res.residual = antidiag_residual(q, f) / res.normalization;
  res.ok = res.lambda_min >= kSosEigenFloor && res.residual <= kSosIdentityTol;
  return res;
}

bool SosCertificate::valid() const {
  // Validity rests on the stored margins, not on how the solve ended: a
  // stalled solve whose repaired matrices clear the floors is a perfectly
  // good certificate, which is the point of certifying at all.
  if (!std::isfinite(certified_bound) || rows.empty()) return false;
  if (dual_lambda_min < kSosEigenFloor) return false;
  for (const auto& r : rows) {
    if (r.delta < 0.0) return false;
    if (r.identity_residual > kSosIdentityTol || r.gram_lambda_min < kSosEigenFloor) return false;
  }
  return true;
}

SosCertificate certify_interval(int n, const KTriple& k, double a1, double a2,
                                const SdpParams& params, const SolverSettings& settings) {
  SosCertificate cert;
  cert.n = n;
  cert.k = k;
  cert.a1 = a1;
  cert.a2 = a2;
  cert.params = params;
  cert.solver = solver_info(settings);
  cert.certified_bound = kNan;

  const std::vector<SosRow> rows = sos_rows(n, k, a1, a2, params);
  const Layout lay = make_layout(params, rows);
  const ConicProgram prog = build_interval_program(n, rows, lay);
  const SolverReport rep = solve(prog, settings);
  cert.status = rep.status;
  if (rep.solution.empty()) return cert;

  // Repair the duals first: clamp the sign constraints, and project a matrix
  // variable onto the PSD cone only when it actually breaches half its
  // normalized eigenvalue floor. A block already inside the floor is left
  // untouched: projection would shift every row value by the eigenvalue it
  // removes, and near-active rows cannot afford that. Everything downstream
  // -- the Gram targets and the certified value -- is recomputed from the
  // repaired duals.
  const auto repair_block = [](Eigen::MatrixXd m) {
    const double norm = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (min_eigenvalue(m) < 0.5 * kSosEigenFloor * norm) m = psd_clamp(std::move(m));
    return m;
  };
  cert.dual.alphas.resize(lay.p_lp);
  for (int i = 0; i < lay.p_lp; ++i) cert.dual.alphas[i] = std::max(0.0, rep.solution[i]);
  cert.dual.beta = repair_block(matrix_from_solution(rep.solution, lay.base_beta, 2));
  for (int kk = 0; kk <= lay.p_sdp; ++kk)
    cert.dual.F.push_back(
        repair_block(matrix_from_solution(rep.solution, lay.base_f[kk], lay.f_order[kk])));

  cert.dual_lambda_min = min_eigenvalue(cert.dual.beta) / std::max(1.0, cert.dual.beta.cwiseAbs().maxCoeff());
  for (const auto& f : cert.dual.F)
    cert.dual_lambda_min = std::min(
        cert.dual_lambda_min, min_eigenvalue(f) / std::max(1.0, f.cwiseAbs().maxCoeff()));

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Polynomial target =
        line_transform(row_slack_poly(rows[r], cert.dual, 0.0), rows[r].transform_degree);
    const double scale = std::max(1.0, linf(target));

    Eigen::MatrixXd q = matrix_from_solution(rep.solution, lay.base_gram[r], lay.gram_order[r]);
    const Eigen::VectorXd w = gram_basis_weights(lay.gram_order[r]);
    q = (w * w.transpose()).cwiseProduct(q);  // back to the plain monomial basis
    project_antidiagonals(q, target);
    if (min_eigenvalue(q) < repair_floor(scale)) {
      if (!dykstra_repair(q, target, repair_floor(scale))) {
        const GramResult fallback = gram_verify(target);
        if (fallback.q.size() > 0) {
          Eigen::MatrixXd qf = fallback.q;
          project_antidiagonals(qf, target);
          if (min_eigenvalue(qf) > min_eigenvalue(q)) q = qf;
        }
        project_antidiagonals(q, target);
      }
    }

    CertificateRow crow;
    crow.name = rows[r].name;
    crow.gram = q;
    crow.normalization = scale;
    crow.identity_residual = antidiag_residual(q, target) / scale;
    crow.gram_lambda_min = min_eigenvalue(q) / scale;
    cert.rows.push_back(std::move(crow));
  }

  cert.certified_bound = dual_objective_value(n, params, cert.dual);
  return cert;
}

AuditReport audit_certificate(const SosCertificate& c) {
  AuditReport report;
  auto fail = [&](const std::string& what) { report.findings.push_back(what); };

  std::vector<SosRow> rows;
  try {
    rows = sos_rows(c.n, c.k, c.a1, c.a2, c.params);
  } catch (const std::exception& e) {
    fail(std::string("constraint rebuild failed: ") + e.what());
    report.pass = false;
    return report;
  }

  if (static_cast<int>(c.dual.alphas.size()) != c.params.p_lp)
    fail("alpha count does not match p_lp");
  if (static_cast<int>(c.dual.F.size()) != c.params.p_sdp + 1)
    fail("moment multiplier count does not match p_sdp");
  if (c.rows.size() != rows.size()) fail("certificate row count mismatch");
  if (!std::isfinite(c.certified_bound)) fail("certified bound is not finite");
  if (!report.findings.empty()) {
    report.pass = false;
    return report;
  }

  for (std::size_t i = 0; i < c.dual.alphas.size(); ++i)
    if (c.dual.alphas[i] < 0.0)
      fail("alpha" + std::to_string(i + 1) + " is negative");
  {
    const double norm = std::max(1.0, c.dual.beta.cwiseAbs().maxCoeff());
    if (min_eigenvalue(c.dual.beta) < kSosEigenFloor * norm)
      fail("beta block is not PSD within the floor");
  }
  for (std::size_t kk = 0; kk < c.dual.F.size(); ++kk) {
    const auto& f = c.dual.F[kk];
    if (f.rows() != c.params.p_sdp - static_cast<int>(kk) + 1)
      fail("moment multiplier " + std::to_string(kk) + " has the wrong order");
    else {
      const double norm = std::max(1.0, f.cwiseAbs().maxCoeff());
      if (min_eigenvalue(f) < kSosEigenFloor * norm)
        fail("moment multiplier " + std::to_string(kk) + " is not PSD within the floor");
    }
  }

  for (std::size_t r = 0; r < rows.size() && r < c.rows.size(); ++r) {
    const CertificateRow& crow = c.rows[r];
    if (crow.name != rows[r].name) {
      fail("row " + std::to_string(r) + " name mismatch");
      continue;
    }
    if (crow.delta < 0.0) {
      fail(crow.name + ": certified cushion is negative");
      continue;
    }
    Polynomial target;
    try {
      target = line_transform(row_slack_poly(rows[r], c.dual, crow.delta),
                              rows[r].transform_degree);
    } catch (const std::exception& e) {
      fail(crow.name + ": slack rebuild failed: " + std::string(e.what()));
      continue;
    }
    const double scale = std::max(1.0, linf(target));
    if (crow.gram.rows() != rows[r].transform_degree + 1 ||
        crow.gram.rows() != crow.gram.cols()) {
      fail(crow.name + ": Gram matrix has the wrong order");
      continue;
    }
    const double asym = (crow.gram - crow.gram.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) fail(crow.name + ": Gram matrix is not symmetric");
    const double residual = antidiag_residual(crow.gram, target);
    if (residual > kSosIdentityTol * scale)
      fail(crow.name + ": coefficient identity residual " + std::to_string(residual / scale) +
           " exceeds the floor");
    const double lmin = min_eigenvalue(crow.gram);
    if (lmin < kSosEigenFloor * scale)
      fail(crow.name + ": Gram lambda_min " + std::to_string(lmin / scale) +
           " is below the floor");
  }

  const double value = dual_objective_value(c.n, c.params, c.dual);
  if (std::abs(value - c.certified_bound) > 1e-9 * std::max(1.0, std::abs(value)))
    fail("stored bound does not match the dual objective");

  report.pass = report.findings.empty();
  return report;
}

nlohmann::json certificate_to_json(const SosCertificate& c) {
  auto matrix_json = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };

  nlohmann::json j;
  j["n"] = c.n;
  j["k"] = {c.k.k1, c.k.k2, c.k.k3};
  j["interval"] = {c.a1, c.a2};
  j["p_lp"] = c.params.p_lp;
  j["p_sdp"] = c.params.p_sdp;
  j["alphas"] = c.dual.alphas;
  j["beta"] = matrix_json(c.dual.beta);
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : c.dual.F) fs.push_back(matrix_json(f));
  j["f"] = std::move(fs);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    nlohmann::json row;
    row["name"] = r.name;
    row["gram"] = matrix_json(r.gram);
    row["delta"] = r.delta;
    row["normalization"] = r.normalization;
    row["identity_residual"] = r.identity_residual;
    row["gram_lambda_min"] = r.gram_lambda_min;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["certified_bound"] = c.certified_bound;
  j["dual_lambda_min"] = c.dual_lambda_min;
  j["status"] = to_string(c.status);
  j["solver"] = c.solver;
  return j;
}

SosCertificate certificate_from_json(const nlohmann::json& j) {
  auto matrix_from = [](const nlohmann::json& rows) {
    const int nr = static_cast<int>(rows.size());
    const int nc = nr > 0 ? static_cast<int>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int c = 0; c < nc; ++c) m(i, c) = rows.at(i).at(c).get<double>();
    return m;
  };

  SosCertificate c;
  c.n = j.at("n").get<int>();
  c.k = KTriple{j.at("k").at(0).get<int>(), j.at("k").at(1).get<int>(), j.at("k").at(2).get<int>()};
  c.a1 = j.at("interval").at(0).get<double>();
  c.a2 = j.at("interval").at(1).get<double>();
  c.params.p_lp = j.at("p_lp").get<int>();
  c.params.p_sdp = j.at("p_sdp").get<int>();
  c.dual.alphas = j.at("alphas").get<std::vector<double>>();
  c.dual.beta = matrix_from(j.at("beta"));
  for (const auto& f : j.at("f")) c.dual.F.push_back(matrix_from(f));
  for (const auto& row : j.at("rows")) {
    CertificateRow r;
    r.name = row.at("name").get<std::string>();
    r.gram = matrix_from(row.at("gram"));
    r.delta = row.at("delta").get<double>();
    r.normalization = row.at("normalization").get<double>();
    r.identity_residual = row.at("identity_residual").get<double>();
    r.gram_lambda_min = row.at("gram_lambda_min").get<double>();
    c.rows.push_back(std::move(r));
  }
  c.certified_bound = j.at("certified_bound").get<double>();
  c.dual_lambda_min = j.at("dual_lambda_min").get<double>();
  c.status = status_from_string(j.at("status").get<std::string>());
  c.solver = j.at("solver").get<std::string>();
  return c;
}

ConicProgram build_sos_pointwise(int n, const DistanceTriple& d, const SdpParams& params) {
  if (!d.valid()) throw std::invalid_argument("build_sos_pointwise: invalid distance triple");
  ConicProgram prog;
  Layout lay;
  lay.p_lp = params.p_lp;
  lay.p_sdp = params.p_sdp;
  for (int i = 0; i < params.p_lp; ++i)
    prog.add_variable("alpha" + std::to_string(i + 1), true);
  lay.base_beta = prog.add_variable("b11", false);
  prog.add_variable("b12", false);
  prog.add_variable("b22", false);
  for (int k = 0; k <= params.p_sdp; ++k) {
    lay.base_f.push_back(prog.num_variables());
    lay.f_order.push_back(params.p_sdp - k + 1);
    const auto idx = entry_index(params.p_sdp - k + 1);
    for (auto [i, j] : idx)
      prog.add_variable(
          "f" + std::to_string(k) + "_" + std::to_string(i) + "_" + std::to_string(j), false);
  }

  prog.set_objective(Sense::Minimize, 1.0, dual_objective_terms(n, lay));

  {
    PsdConstraint beta;
    beta.name = "beta";
    beta.constant = Eigen::MatrixXd::Zero(2, 2);
    beta.vars = {lay.base_beta, lay.base_beta + 1, lay.base_beta + 2};
    Eigen::MatrixXd e00 = Eigen::MatrixXd::Zero(2, 2), e01 = e00, e11 = e00;
    e00(0, 0) = 1.0;
    e01(0, 1) = e01(1, 0) = 1.0;
    e11(1, 1) = 1.0;
    beta.coefs = {e00, e01, e11};
    prog.add_psd(std::move(beta));
  }
  for (int k = 0; k <= params.p_sdp; ++k)
    add_symmetric_variable_block(prog, "f" + std::to_string(k), lay.base_f[k], lay.f_order[k]);

  const double dist[3] = {d.d1, d.d2, d.d3};
  auto moment_terms = [&](LinearRow& row, const std::array<double, 3>& args, double factor) {
    for (int k = 0; k <= params.p_sdp; ++k) {
      const Eigen::MatrixXd s = s_matrix(n, k, args[0], args[1], args[2], params.p_sdp);
      const auto idx = entry_index(params.p_sdp - k + 1);
      for (int e = 0; e < static_cast<int>(idx.size()); ++e) {
        auto [i, j] = idx[e];
        const double w = (i == j) ? 1.0 : 2.0;
        if (s(i, j) != 0.0) row.terms.push_back({lay.base_f[k] + e, factor * w * s(i, j)});
      }
    }
  };

  for (const RowShape& shape : row_shapes()) {
    LinearRow row;
    row.rel = Relation::LE;
    row.name = shape.name;
    if (shape.pair) {
      row.rhs = -1.0;
      for (int i = 1; i <= params.p_lp; ++i)
        row.terms.push_back({i - 1, gegenbauer_eval({n, i}, dist[shape.m])});
      row.terms.push_back({lay.base_beta + 1, 2.0});
      row.terms.push_back({lay.base_beta + 2, 1.0});
      moment_terms(row, {dist[shape.m], dist[shape.m], 1.0}, 3.0);
    } else {
      row.rhs = 0.0;
      row.terms.push_back({lay.base_beta + 2, 1.0});
      moment_terms(row, {dist[shape.pat[0]], dist[shape.pat[1]], dist[shape.pat[2]]}, 1.0);
    }
    prog.add_row(std::move(row));
  }
  return prog;
}

CoverResult certify_cover(int n, const KTriple& k, double a1, double a2, const SdpParams& params,
                          const SolverSettings& settings, double width_floor) {
  if (!(a1 < a2)) throw std::invalid_argument("certify_cover: need a1 < a2");
  CoverResult out;
  out.complete = true;

  // Depth-first, left to right, so pieces come out in interval order.
  std::vector<std::pair<double, double>> stack{{a1, a2}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    SosCertificate cert;
    bool good = false;
    try {
      cert = certify_interval(n, k, lo, hi, params, settings);
      good = cert.valid() && audit_certificate(cert).pass;
    } catch (const std::invalid_argument&) {
      good = false;  // endpoint outside the domain: cannot certify this piece
    }
    if (good) {
      out.pieces.push_back(std::move(cert));
      continue;
    }
    if (hi - lo <= width_floor) {
      out.complete = false;  // give up on this piece, keep it for diagnostics
      out.pieces.push_back(std::move(cert));
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    stack.emplace_back(mid, hi);  // pushed first so the left half pops first
    stack.emplace_back(lo, mid);
  }

  std::sort(out.pieces.begin(), out.pieces.end(),
            [](const SosCertificate& a, const SosCertificate& b) { return a.a1 < b.a1; });
  return out;
}

}  // namespace tds
