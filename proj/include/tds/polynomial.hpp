#pragma once

// Dense univariate polynomial arithmetic in double precision.
//
// Coefficients are stored lowest degree first; the degree of a normalized
// polynomial is coeffs().size()-1 with a nonzero trailing coefficient
// (the zero polynomial normalizes to a single 0.0 coefficient).

#include <cstddef>
#include <utility>
#include <vector>

namespace tds {

class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs);

  // Degree as stored (trailing zeros included unless normalized).
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double coeff(int i) const;  // 0 beyond the stored range

  double eval(double x) const;  // Horner
  bool is_zero(double tol = 0.0) const;

  // Copy with exact trailing zeros removed.
  Polynomial normalized() const;

 private:
  std::vector<double> coeffs_;
};

Polynomial poly_add(const Polynomial& a, const Polynomial& b);
Polynomial poly_sub(const Polynomial& a, const Polynomial& b);
Polynomial poly_mul(const Polynomial& a, const Polynomial& b);
Polynomial poly_scale(const Polynomial& a, double s);

// den(a)^m * p(num(a)/den(a)) expanded as a polynomial.
// Requires m >= degree(p) and den not identically zero.
Polynomial poly_compose_rational(const Polynomial& p, const Polynomial& num,
                                 const Polynomial& den, int m);

// Unique interpolant of the stated degree through the given (node, value)
// samples. At least degree+1 distinct nodes are required; the fit must
// reproduce every sample within `tol` (absolute, relative to value scale)
// or a degree-mismatch error is thrown.
Polynomial interpolate(const std::vector<std::pair<double, double>>& samples,
                       int degree, double tol = 1e-8);

// Chebyshev points of the first kind mapped to [lo, hi], ascending.
std::vector<double> chebyshev_nodes(int count, double lo, double hi);

// Coefficientwise comparison after normalization (absolute tolerance).
bool poly_almost_equal(const Polynomial& a, const Polynomial& b,
                       double tol = 1e-9);

}  // namespace tds
