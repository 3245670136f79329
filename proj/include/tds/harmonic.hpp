#pragma once

// Harmonic absolute bound for spherical three-distance sets: expand the
// annihilator cubic of the inner products in the Gegenbauer basis and sum
// the harmonic space dimensions h^n_k over the strictly positive
// coefficients. Also provides the Delsarte-Goethals-Seidel bound.

#include <cstdint>

namespace tds {

struct DistanceTriple {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  bool valid() const { return -1.0 <= d1 && d1 < d2 && d2 < d3 && d3 < 1.0; }
};

// Gegenbauer expansion coefficients of the monic annihilator cubic
// (x-d1)(x-d2)(x-d3) = f0*G_0 + f1*G_1 + f2*G_2 + f3*G_3.
struct AnnihilatorCoeffs {
  double f0 = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  double operator[](int k) const;
};

struct HarmonicBound {
  std::int64_t value = 0;                // sum over f_k > tol (the certified bound)
  std::int64_t value_with_ambiguous = 0; // also counting |f_k| <= tol
  bool ambiguous = false;                // some coefficient within tol of zero
};

// C(n+s-1, n-1) + C(n+s-2, n-1): absolute bound for s-distance sets on S^{n-1}.
std::int64_t dgs_bound(int n, int s);

// Dimension h^n_k of degree-k harmonic homogeneous polynomials in n variables:
// C(n+k-1, k) - C(n+k-3, k-2), second term 0 for k < 2.
std::int64_t harmonic_space_dim(int n, int k);

// Closed forms, cross-validated against a least-squares Gegenbauer fit of the
// cubic (throws on internal inconsistency above 1e-8).
AnnihilatorCoeffs annihilator_coeffs(int n, const DistanceTriple& d);

// Sign tolerance: coefficients with |f_k| < 1e-9 are flagged ambiguous and
// both the excluding (certified) and including values are reported.
HarmonicBound harmonic_bound(int n, const DistanceTriple& d, double sign_tol = 1e-9);

}  // namespace tds
