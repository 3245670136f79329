#include "tds/gegenbauer.hpp"

#include <stdexcept>

namespace tds {

namespace {
void check(const GegenbauerParams& p) {
  if (p.n < 2) throw std::invalid_argument("gegenbauer: n must be >= 2");
  if (p.k < 0) throw std::invalid_argument("gegenbauer: k must be >= 0");
}
}  // namespace

double gegenbauer_eval(const GegenbauerParams& params, double t) {
  check(params);
  if (params.k == 0) return 1.0;
  if (params.k == 1) return t;
  double gm2 = 1.0, gm1 = t, g = t;
  for (int k = 2; k <= params.k; ++k) {
    g = ((2.0 * k + params.n - 4.0) * t * gm1 - (k - 1.0) * gm2) / (k + params.n - 3.0);
    gm2 = gm1;
    gm1 = g;
  }
  return g;
}

Polynomial gegenbauer_coeffs(const GegenbauerParams& params) {
  check(params);
  Polynomial gm2({1.0}), gm1({0.0, 1.0});
  if (params.k == 0) return gm2;
  if (params.k == 1) return gm1;
  Polynomial g = gm1;
  for (int k = 2; k <= params.k; ++k) {
    // Multiplying by t is a coefficient shift, so parity zeros stay exact.
    std::vector<double> shifted(gm1.coeffs().size() + 1, 0.0);
    for (std::size_t i = 0; i < gm1.coeffs().size(); ++i) shifted[i + 1] = gm1.coeffs()[i];
    Polynomial t_gm1(shifted);
    g = poly_scale(poly_add(poly_scale(t_gm1, 2.0 * k + params.n - 4.0),
                            poly_scale(gm2, -(k - 1.0))),
                   1.0 / (k + params.n - 3.0));
    gm2 = gm1;
    gm1 = g;
  }
  return g;
}

}  // namespace tds
