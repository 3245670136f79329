#pragma once

// In-process interior-point solver for conic programs over nonnegative and
// PSD cones. Homogeneous self-dual embedding with Nesterov-Todd scaling and
// a Mehrotra predictor-corrector step, so it detects infeasibility and
// unboundedness as well as optimality, and reports residuals usable as
// certified error margins.

#include <string>
#include <vector>

#include "tds/conic.hpp"

namespace tds {

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, failure };

const char* to_string(SolveStatus s);

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  // Problems here are tiny (hundreds of rows at most) and a predictor-
  // corrector method converges in tens of iterations; 200 is a generous cap.
  int max_iterations = 200;
  double time_limit_seconds = 0.0;  // 0 = unlimited
};

struct SolverReport {
  SolveStatus status = SolveStatus::failure;
  // objective in the program's declared sense, constant term included;
  // meaningful only for optimal/near_optimal
  double objective = 0.0;
  double primal_residual = 0.0;  // scaled ||Ax-b|| at the returned point
  double dual_residual = 0.0;    // scaled dual feasibility residual
  double gap = 0.0;              // absolute primal-dual gap estimate
  double max_violation = 0.0;    // worst original-units constraint violation
  int iterations = 0;
  double solve_time_seconds = 0.0;
  std::vector<double> solution;  // per declared variable (optimal/near_optimal)
};

SolverReport solve(const ConicProgram& program, const SolverSettings& settings = {});

// Version + tolerances string, embedded in reports and cache keys.
std::string solver_info(const SolverSettings& settings = {});

}  // namespace tds
