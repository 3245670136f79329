#pragma once

// Interval certificates for the three-point bound. The dual program's scalar
// constraints, with (d1,d2) eliminated through the K-triple's closed form,
// are univariate polynomial inequalities in d3. Mapping d3 in [a1,a2] onto
// the whole real line turns each "polynomial >= 0 on the interval" condition
// into a sum-of-squares condition f+ = X Q X^T with Q PSD, so one aggregate
// SDP over (dual variables + one Gram matrix per constraint) yields a bound
// valid for every d3 in the interval. Certificates store every matrix with
// explicit numeric margins and can be re-audited from scratch.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "tds/conic.hpp"
#include "tds/nozaki.hpp"
#include "tds/polynomial.hpp"
#include "tds/programs.hpp"

namespace tds {

// Audit floors; all normalized by the scale of the matrix/polynomial they
// guard (max(1, largest coefficient / entry)). Rows are solved as stated,
// with no artificial tightening: the objective moves by roughly 5e6 per unit
// of tightening on the larger instances, so even 1e-6 costs several units of
// bound, while the interior-point solution already carries margins of that
// size on its own.
inline constexpr double kSosIdentityTol = 1e-7;  // |coef(XQX^T) - coef(f+)|
inline constexpr double kSosEigenFloor = -1e-8;  // lambda_min of any matrix

struct DualVariables {
  std::vector<double> alphas;      // p_lp entries, >= 0
  Eigen::Matrix2d beta;            // 2x2, PSD within margin
  std::vector<Eigen::MatrixXd> F;  // k = 0..p_sdp, order p_sdp-k+1, PSD
};

// One scalar constraint of the dual program as polynomials in the interval
// coordinate xi in [-1,1] (d3 = mid + halfwidth*xi): the constraint reads
//   sum_i alphas[i]*alpha_coef[i](xi) + beta12*beta12_coef + ...
//     + sum_k <F_k restricted to entries, f_coef[k]>  <=  rhs.
// f_coef[k] lists one polynomial per distinct entry (i<=j, column-major)
// with the symmetry weight and the row's factor 3 already folded in.
struct SosRow {
  std::string name;
  double rhs = 0.0;          // -1 for the three pair rows, 0 for triple rows
  int transform_degree = 0;  // degree bound D used by the interval transform
  std::vector<Polynomial> alpha_coef;  // empty for triple rows
  Polynomial beta12_coef, beta22_coef;
  std::vector<std::vector<Polynomial>> f_coef;
};

// The 3 pair rows followed by the 10 triple rows for d3 in [a1,a2].
// Pair-row polynomial pieces are composed exactly from the Gegenbauer
// coefficient form; moment-matrix entries are recovered by exact-degree
// interpolation at Chebyshev nodes of the interval.
std::vector<SosRow> sos_rows(int n, const KTriple& k, double a1, double a2,
                             const SdpParams& params);

// Left-hand side of a row at one point, for spot checks and property tests.
double sos_row_value(const SosRow& row, const DualVariables& dual, double xi);

// (1+t^2)^m * f((a1+a2*t^2)/(1+t^2)) for m = degree(f): nonnegative on all
// of R iff f >= 0 on [a1,a2]. Throws std::invalid_argument when a1 >= a2.
Polynomial interval_transform(const Polynomial& f, double a1, double a2);

struct GramResult {
  bool ok = false;
  Eigen::MatrixXd q;            // order degree/2 + 1 when ok
  double lambda_min = 0.0;      // of q, normalized by scale
  double residual = 0.0;        // max coefficient mismatch, normalized
  double normalization = 1.0;   // max(1, |f+|_inf)
};

// Search for Q PSD with X Q X^T = f_plus coefficientwise; failure means no
// certificate was found, not a disproof. Throws on odd-degree input.
GramResult gram_verify(const Polynomial& f_plus);

struct CertificateRow {
  std::string name;
  Eigen::MatrixXd gram;
  // The Gram certifies slack(xi) - delta >= 0 for this nonnegative cushion;
  // any delta >= 0 yields the underlying constraint row.
  double delta = 0.0;
  double normalization = 1.0;      // s_c = max(1, |f+|_inf)
  double identity_residual = 0.0;  // normalized by s_c
  double gram_lambda_min = 0.0;    // normalized by s_c
};

struct SosCertificate {
  int n = 0;
  KTriple k;
  double a1 = 0.0, a2 = 0.0;
  SdpParams params{};
  DualVariables dual;
  std::vector<CertificateRow> rows;  // same order as sos_rows
  double certified_bound = std::numeric_limits<double>::quiet_NaN();
  double dual_lambda_min = 0.0;  // min normalized lambda_min over beta, F_k
  SolveStatus status = SolveStatus::failure;
  std::string solver;

  bool valid() const;  // finite bound and every stored margin clears its floor
};

// Solve the aggregate interval SDP, repair the returned matrices to the
// audit floors, and recompute the certified bound from the stored duals.
// The result's rows/margins are filled even when the bound rests on a
// near-optimal solve; valid() plus audit_certificate() are the gate.
SosCertificate certify_interval(int n, const KTriple& k, double a1, double a2,
                                const SdpParams& params = {},
                                const SolverSettings& settings = {});

struct AuditReport {
  bool pass = false;
  std::vector<std::string> findings;  // human-readable failures, empty on pass
};

// Recompute every polynomial identity and eigenvalue floor with fresh
// arithmetic (no solver, no stored intermediates beyond the certificate).
AuditReport audit_certificate(const SosCertificate& c);

nlohmann::json certificate_to_json(const SosCertificate& c);
SosCertificate certificate_from_json(const nlohmann::json& j);

// Dual program at one fixed triple (scalar rows, no interval, no Grams);
// its optimum upper-bounds the pointwise primal value (weak duality).
ConicProgram build_sos_pointwise(int n, const DistanceTriple& d,
                                 const SdpParams& params);

// Certify [a1,a2], bisecting on failure down to the width floor; complete
// is false when some piece could not be certified at the floor.
struct CoverResult {
  bool complete = false;
  std::vector<SosCertificate> pieces;
};
CoverResult certify_cover(int n, const KTriple& k, double a1, double a2,
                          const SdpParams& params = {},
                          const SolverSettings& settings = {},
                          double width_floor = 1e-3);

}  // namespace tds
