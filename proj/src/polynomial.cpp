#include "tds/polynomial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tds {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_ = {0.0};
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw std::invalid_argument("polynomial: non-finite coefficient");
  }
}

double Polynomial::coeff(int i) const {
  if (i < 0 || i >= static_cast<int>(coeffs_.size())) return 0.0;
  return coeffs_[static_cast<std::size_t>(i)];
}

double Polynomial::eval(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

bool Polynomial::is_zero(double tol) const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [tol](double c) { return std::abs(c) <= tol; });
}

Polynomial Polynomial::normalized() const {
  std::vector<double> c = coeffs_;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  return Polynomial(c);
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coeffs().size(), b.coeffs().size()), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = a.coeff(static_cast<int>(i)) + b.coeff(static_cast<int>(i));
  return Polynomial(c);
}

Polynomial poly_sub(const Polynomial& a, const Polynomial& b) {
  return poly_add(a, poly_scale(b, -1.0));
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
  const auto& ca = a.coeffs();
  const auto& cb = b.coeffs();
  std::vector<double> c(ca.size() + cb.size() - 1, 0.0);
  for (std::size_t i = 0; i < ca.size(); ++i)
    for (std::size_t j = 0; j < cb.size(); ++j) c[i + j] += ca[i] * cb[j];
  return Polynomial(c);
}

Polynomial poly_scale(const Polynomial& a, double s) {
  std::vector<double> c = a.coeffs();
  for (double& x : c) x *= s;
  return Polynomial(c);
}

Polynomial poly_compose_rational(const Polynomial& p, const Polynomial& num,
                                 const Polynomial& den, int m) {
  if (den.normalized().is_zero())
    throw std::invalid_argument("poly_compose_rational: zero denominator");
  const int dp = p.normalized().degree();
  if (m < dp) throw std::invalid_argument("poly_compose_rational: m < degree(p)");

  // sum_j p_j * num^j * den^(m-j), built from cached power ladders.
  std::vector<Polynomial> num_pow(static_cast<std::size_t>(dp) + 1),
      den_pow(static_cast<std::size_t>(m) + 1);
  num_pow[0] = Polynomial({1.0});
  for (int j = 1; j <= dp; ++j) num_pow[j] = poly_mul(num_pow[j - 1], num);
  den_pow[0] = Polynomial({1.0});
  for (int j = 1; j <= m; ++j) den_pow[j] = poly_mul(den_pow[j - 1], den);

  Polynomial acc({0.0});
  for (int j = 0; j <= dp; ++j) {
    const double pj = p.coeff(j);
    if (pj == 0.0) continue;
    acc = poly_add(acc, poly_scale(poly_mul(num_pow[j], den_pow[m - j]), pj));
  }
  return acc;
}

Polynomial interpolate(const std::vector<std::pair<double, double>>& samples,
                       int degree, double tol) {
  if (degree < 0) throw std::invalid_argument("interpolate: negative degree");
  const int rows = static_cast<int>(samples.size());
  if (rows < degree + 1) throw std::invalid_argument("interpolate: need at least degree+1 nodes");
  for (int i = 0; i < rows; ++i)
    for (int j = i + 1; j < rows; ++j)
      if (samples[i].first == samples[j].first)
        throw std::invalid_argument("interpolate: duplicate nodes");

  Eigen::MatrixXd V(rows, degree + 1);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      V(i, j) = p;
      p *= samples[i].first;
    }
    y(i) = samples[i].second;
  }
  Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);

  Polynomial result(std::vector<double>(c.data(), c.data() + c.size()));
  double scale = 1.0;
  for (const auto& s : samples) scale = std::max(scale, std::abs(s.second));
  for (const auto& s : samples) {
    if (std::abs(result.eval(s.first) - s.second) > tol * scale)
      throw std::runtime_error("interpolate: residual above tolerance (degree mismatch?)");
  }
  return result;
}

std::vector<double> chebyshev_nodes(int count, double lo, double hi) {
  if (count < 1) throw std::invalid_argument("chebyshev_nodes: count < 1");
  if (!(lo < hi)) throw std::invalid_argument("chebyshev_nodes: empty interval");
  std::vector<double> nodes(static_cast<std::size_t>(count));
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int r = 0; r < count; ++r) {
    const double theta = M_PI * (2.0 * r + 1.0) / (2.0 * count);
    nodes[static_cast<std::size_t>(count - 1 - r)] = mid + half * std::cos(theta);
  }
  return nodes;
}

bool poly_almost_equal(const Polynomial& a, const Polynomial& b, double tol) {
  const Polynomial na = a.normalized(), nb = b.normalized();
  const int top = std::max(na.degree(), nb.degree());
  for (int i = 0; i <= top; ++i)
    if (std::abs(na.coeff(i) - nb.coeff(i)) > tol) return false;
  return true;
}

}  // namespace tds
