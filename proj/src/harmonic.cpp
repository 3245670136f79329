#include "tds/harmonic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "tds/gegenbauer.hpp"

namespace tds {

namespace {

// Exact through n=50, s=3 territory with room to spare.
__int128 binom128(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // numerator stays divisible at every step
  }
  return r;
}

std::int64_t to_i64(__int128 v) {
  if (v > static_cast<__int128>(INT64_MAX) || v < 0)
    throw std::overflow_error("binomial out of int64 range");
  return static_cast<std::int64_t>(v);
}

void check_triple(const DistanceTriple& d) {
  if (!d.valid()) throw std::invalid_argument("distance triple must satisfy -1 <= d1 < d2 < d3 < 1");
}

}  // namespace

double AnnihilatorCoeffs::operator[](int k) const {
  switch (k) {
    case 0: return f0;
    case 1: return f1;
    case 2: return f2;
    case 3: return f3;
    default: throw std::out_of_range("annihilator coefficient index");
  }
}

std::int64_t dgs_bound(int n, int s) {
  if (n < 1 || s < 1) throw std::invalid_argument("dgs_bound: n >= 1 and s >= 1 required");
  return to_i64(binom128(n + s - 1, n - 1) + binom128(n + s - 2, n - 1));
}

std::int64_t harmonic_space_dim(int n, int k) {
  if (n < 2 || k < 0) throw std::invalid_argument("harmonic_space_dim: n >= 2 and k >= 0 required");
  __int128 h = binom128(n + k - 1, k);
  if (k >= 2) h -= binom128(n + k - 3, k - 2);
  return to_i64(h);
}

AnnihilatorCoeffs annihilator_coeffs(int n, const DistanceTriple& d) {
  if (n < 2) throw std::invalid_argument("annihilator_coeffs: n >= 2 required");
  check_triple(d);

  const double e1 = d.d1 + d.d2 + d.d3;
  const double e2 = d.d1 * d.d2 + d.d1 * d.d3 + d.d2 * d.d3;
  const double e3 = d.d1 * d.d2 * d.d3;

  AnnihilatorCoeffs f;
  f.f0 = -e3 - e1 / n;
  f.f1 = e2 + 3.0 / (n + 2);
  f.f2 = (1.0 - n) / n * e1;
  f.f3 = (n - 1.0) / (n + 2.0);

  // Cross-check: least-squares fit of (d1-x)(d2-x)(d3-x) against {G_k}.
  // That product is the negation of the monic cubic the closed forms expand,
  // so the fitted coefficients must equal -f within 1e-8.
  const auto nodes = chebyshev_nodes(10, -1.0, 1.0);
  Eigen::MatrixXd G(10, 4);
  Eigen::VectorXd y(10);
  for (int r = 0; r < 10; ++r) {
    const double x = nodes[static_cast<std::size_t>(r)];
    for (int k = 0; k <= 3; ++k) G(r, k) = gegenbauer_eval({n, k}, x);
    y(r) = (d.d1 - x) * (d.d2 - x) * (d.d3 - x);
  }
  Eigen::VectorXd fit = G.colPivHouseholderQr().solve(y);
  for (int k = 0; k <= 3; ++k) {
    if (std::abs(-fit(k) - f[k]) > 1e-8)
      throw std::runtime_error("annihilator_coeffs: closed form disagrees with Gegenbauer fit");
  }
  return f;
}

HarmonicBound harmonic_bound(int n, const DistanceTriple& d, double sign_tol) {
  const AnnihilatorCoeffs f = annihilator_coeffs(n, d);
  HarmonicBound out;
  for (int k = 0; k <= 3; ++k) {
    const double fk = f[k];
    const std::int64_t hk = harmonic_space_dim(n, k);
    if (std::abs(fk) < sign_tol) {
      out.ambiguous = true;
      out.value_with_ambiguous += hk;  // included only on the safe side
    } else if (fk > 0.0) {
      out.value += hk;
      out.value_with_ambiguous += hk;
    }
  }
  return out;
}

}  // namespace tds
