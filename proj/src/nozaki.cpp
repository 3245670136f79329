#include "tds/nozaki.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace tds {

bool KTriple::valid() const {
  if (k1 == 0 || k2 == 0 || k3 == 0) return false;
  if (k1 + k2 + k3 != 1) return false;
  if (static_cast<std::int64_t>(k1) * k2 >= 0) return false;
  if (std::abs(k1) >= std::abs(k2)) return false;
  // product K1*K2*K3 must be negative so that sqrt(-K1*K2*K3) is real
  return static_cast<std::int64_t>(k1) * k2 * k3 < 0;
}

NozakiContext nozaki_context(int n) {
  if (n < 2) throw std::invalid_argument("nozaki_context: dimension must be >= 2");
  NozakiContext ctx;
  ctx.n = n;
  ctx.N = harmonic_space_dim(n, 0) + harmonic_space_dim(n, 1) + harmonic_space_dim(n, 2);
  const double N = static_cast<double>(ctx.N);
  ctx.k_cap = static_cast<std::int64_t>(std::floor(0.5 + std::sqrt(N * N / (2.0 * N - 2.0) + 0.25)));
  return ctx;
}

std::optional<DistanceTriple> recover_distances(const KTriple& k, double d3) {
  if (!k.valid()) throw std::invalid_argument("recover_distances: invalid K-triple");
  if (!(d3 > 0.0 && d3 < 1.0)) throw std::invalid_argument("recover_distances: d3 must lie in (0,1)");

  const double k1 = k.k1, k2 = k.k2, k3 = k.k3;
  const double c = std::sqrt(-k1 * k2 * k3);
  const double a = d3;
  const double denom12 = k1 + k2;  // nonzero: |k1| < |k2| and opposite signs

  double d1 = (k1 - a * k1 * k3 - (a - 1.0) * c) / (k1 * denom12);
  double d2 = (k2 - a * k2 * k3 + (a - 1.0) * c) / (k2 * denom12);

  constexpr double kBoundarySlack = 1e-9;
  if (d1 < -1.0) {
    if (d1 < -1.0 - kBoundarySlack) return std::nullopt;
    d1 = -1.0;
  }
  DistanceTriple d{d1, d2, d3};
  if (!d.valid()) return std::nullopt;
  return d;
}

std::pair<double, double> recover_distances_rejected_branch(const KTriple& k, double d3) {
  if (!k.valid()) throw std::invalid_argument("recover_distances_rejected_branch: invalid K-triple");
  if (!(d3 > 0.0 && d3 < 1.0))
    throw std::invalid_argument("recover_distances_rejected_branch: d3 must lie in (0,1)");
  const double k1 = k.k1, k2 = k.k2, k3 = k.k3;
  const double c = std::sqrt(-k1 * k2 * k3);
  const double a = d3;
  const double denom12 = k1 + k2;
  const double d1s = (k1 - a * k1 * k3 + (a - 1.0) * c) / (k1 * denom12);
  const double d2s = (k2 - a * k2 * k3 - (a - 1.0) * c) / (k2 * denom12);
  return {d1s, d2s};
}

std::tuple<double, double, double> k_from_distances(const DistanceTriple& d) {
  if (!d.valid()) throw std::invalid_argument("k_from_distances: invalid distance triple");
  const double K1 = (d.d2 - 1.0) * (d.d3 - 1.0) / ((d.d2 - d.d1) * (d.d3 - d.d1));
  const double K2 = (d.d1 - 1.0) * (d.d3 - 1.0) / ((d.d1 - d.d2) * (d.d3 - d.d2));
  const double K3 = (d.d1 - 1.0) * (d.d2 - 1.0) / ((d.d1 - d.d3) * (d.d2 - d.d3));
  return {K1, K2, K3};
}

std::vector<KTriple> enumerate_k_triples(int n) {
  const NozakiContext ctx = nozaki_context(n);
  const int cap = static_cast<int>(ctx.k_cap);
  std::vector<KTriple> out;
  for (int k1 = -cap; k1 <= cap; ++k1) {
    for (int k2 = -cap; k2 <= cap; ++k2) {
      const int k3 = 1 - k1 - k2;
      if (std::abs(k3) > cap) continue;
      KTriple k{k1, k2, k3};
      if (!k.valid()) continue;
      // keep only triples that admit at least one realizable distance triple
      bool admissible = false;
      for (int step = 1; step < 200 && !admissible; ++step) {
        const double d3 = 0.005 * step;
        if (recover_distances(k, d3).has_value()) admissible = true;
      }
      if (admissible) out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tds
