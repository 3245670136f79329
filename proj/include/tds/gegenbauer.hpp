#pragma once

// Gegenbauer polynomials G_k^n on [-1,1], normalized so G_k^n(1) = 1,
// via the three-term recurrence
//   G_k = ((2k+n-4) * t * G_{k-1} - (k-1) * G_{k-2}) / (k+n-3),
// with G_0 = 1 and G_1 = t. This family is positive definite on the unit
// sphere in R^n, which is what the pointwise LP rows rely on.

#include "tds/polynomial.hpp"

namespace tds {

struct GegenbauerParams {
  int n = 2;  // ambient dimension, n >= 2
  int k = 0;  // degree, k >= 0
};

// Value of G_k^n(t); runs the recurrence forward (stable for k <= ~20).
double gegenbauer_eval(const GegenbauerParams& params, double t);

// Coefficient form of the same recurrence; exact degree k, and the parity
// of k is preserved exactly (odd/even coefficient slots stay 0.0).
Polynomial gegenbauer_coeffs(const GegenbauerParams& params);

}  // namespace tds
