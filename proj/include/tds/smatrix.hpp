#pragma once

// Moment matrices for the three-point semidefinite bound. Y_k(u,v,t) has
// entries u^i v^j * w^{k/2} * G_k^{n-1}((t-uv)/sqrt(w)) with
// w = (1-u^2)(1-v^2); S_k averages Y_k over the six permutations of (u,v,t).
// Triple sums of S_k over any finite point set on the sphere are PSD, which
// is what makes them usable as constraint matrices.

#include <Eigen/Dense>

namespace tds {

struct SdpParams {
  int p_lp = 18;
  int p_sdp = 6;
};

// Order (p_sdp-k+1) matrix; entries are polynomial in (u,v,t) thanks to the
// parity pairing of sqrt(w) powers. Arguments must lie in [-1,1].
Eigen::MatrixXd y_matrix(int n, int k, double u, double v, double t, int p_sdp);

// Average of y_matrix over all six argument permutations, stored exactly
// symmetric.
Eigen::MatrixXd s_matrix(int n, int k, double u, double v, double t, int p_sdp);

}  // namespace tds
