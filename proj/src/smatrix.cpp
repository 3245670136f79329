#include "tds/smatrix.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "tds/gegenbauer.hpp"

namespace tds {

namespace {

double clamp_unit(double x, const char* what) {
  if (std::abs(x) > 1.0 + 1e-9)
    throw std::invalid_argument(std::string("y_matrix: argument out of [-1,1]: ") + what);
  return std::clamp(x, -1.0, 1.0);
}

}  // namespace

Eigen::MatrixXd y_matrix(int n, int k, double u, double v, double t, int p_sdp) {
  if (n < 3) throw std::invalid_argument("y_matrix: dimension must be >= 3");
  if (p_sdp < 0) throw std::invalid_argument("y_matrix: p_sdp must be >= 0");
  if (k < 0 || k > p_sdp) throw std::invalid_argument("y_matrix: degree k must satisfy 0 <= k <= p_sdp");
  u = clamp_unit(u, "u");
  v = clamp_unit(v, "v");
  t = clamp_unit(t, "t");

  const int order = p_sdp - k + 1;
  const double w = (1.0 - u * u) * (1.0 - v * v);
  const double z = t - u * v;

  // kernel = w^{k/2} * G_k^{n-1}(z/sqrt(w)), expanded so only integer powers
  // of w appear: sum over coefficients c_j of G_k with j = k mod 2 of
  // c_j * z^j * w^{(k-j)/2}.
  double kernel;
  if (k == 0) {
    kernel = 1.0;
  } else if (w <= 1e-14) {
    // the weight w^{k/2} kills every term at the degenerate corner
    kernel = 0.0;
  } else {
    const Polynomial g = gegenbauer_coeffs({n - 1, k});
    kernel = 0.0;
    for (int j = k; j >= 0; j -= 2) {
      const double cj = g.coeff(j);
      if (cj == 0.0) continue;
      kernel += cj * std::pow(z, j) * std::pow(w, (k - j) / 2);
    }
  }

  Eigen::MatrixXd Y(order, order);
  double upow = 1.0;
  for (int i = 0; i < order; ++i) {
    double vpow = 1.0;
    for (int j = 0; j < order; ++j) {
      Y(i, j) = upow * vpow * kernel;
      vpow *= v;
    }
    upow *= u;
  }
  return Y;
}

Eigen::MatrixXd s_matrix(int n, int k, double u, double v, double t, int p_sdp) {
  const std::array<std::array<double, 3>, 6> perms = {{
      {u, v, t}, {u, t, v}, {v, u, t}, {v, t, u}, {t, u, v}, {t, v, u},
  }};
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p_sdp - k + 1, p_sdp - k + 1);
  for (const auto& p : perms) S += y_matrix(n, k, p[0], p[1], p[2], p_sdp);
  S /= 6.0;
  // store exactly symmetric
  for (int i = 0; i < S.rows(); ++i)
    for (int j = i + 1; j < S.cols(); ++j) {
      const double avg = 0.5 * (S(i, j) + S(j, i));
      S(i, j) = avg;
      S(j, i) = avg;
    }
  return S;
}

}  // namespace tds
