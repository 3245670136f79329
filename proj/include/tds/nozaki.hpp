#pragma once

// Integer invariants (K1,K2,K3) of large spherical three-distance sets and
// the conversion between K-triples and inner-product triples. For a set of
// size >= 2N the K values are integers satisfying
//   K1+K2+K3 = 1,  sum d_i*K_i = 1,  sum d_i^2*K_i = 1,
// are bounded by k_cap, and (d1,d2) recover from (K,d3) in closed form.

#include <optional>
#include <tuple>
#include <vector>

#include "tds/harmonic.hpp"

namespace tds {

struct KTriple {
  int k1 = 0, k2 = 0, k3 = 0;
  bool valid() const;
  bool operator==(const KTriple&) const = default;
  // lexicographic, for deterministic output
  bool operator<(const KTriple& o) const {
    return std::tuple(k1, k2, k3) < std::tuple(o.k1, o.k2, o.k3);
  }
};

struct NozakiContext {
  int n = 0;
  std::int64_t N = 0;      // h^n_0 + h^n_1 + h^n_2
  std::int64_t k_cap = 0;  // floor(1/2 + sqrt(N^2/(2N-2) + 1/4))
  std::int64_t small_set_floor() const { return 2 * N - 1; }
};

NozakiContext nozaki_context(int n);

// All K-triples within k_cap satisfying the KTriple invariants and admitting
// at least one d3 in (0,1) with a valid recovered distance triple (probed on
// a 0.005 grid). Deduplicated, sorted lexicographically.
std::vector<KTriple> enumerate_k_triples(int n);

// Closed-form (d1,d2) for the given d3 in (0,1). Returns nothing when the
// result violates -1 <= d1 < d2 < d3 (out-of-domain sample: caller skips).
// d1 = -1 exactly (within 1e-9, clamped) is accepted as boundary-valid.
std::optional<DistanceTriple> recover_distances(const KTriple& k, double d3);

// The discarded sign branch of the same solve; satisfies d1* >= d2*.
std::pair<double, double> recover_distances_rejected_branch(const KTriple& k, double d3);

// (K1,K2,K3) as real-valued rational expressions in the distances.
std::tuple<double, double, double> k_from_distances(const DistanceTriple& d);

}  // namespace tds
