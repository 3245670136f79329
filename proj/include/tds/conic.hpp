#pragma once

// Solver-agnostic conic program model: named scalar variables (optionally
// nonnegative), linear rows, and PSD constraints given as affine matrix
// expressions (constant matrix plus one coefficient matrix per variable).

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tds {

enum class Sense { Minimize, Maximize };
enum class Relation { LE, GE, EQ };

struct LinearTerm {
  int var = -1;
  double coef = 0.0;
};

struct LinearRow {
  std::vector<LinearTerm> terms;
  Relation rel = Relation::GE;
  double rhs = 0.0;
  std::string name;
};

// constant + sum_m coefs[m] * x[vars[m]]  must be positive semidefinite
struct PsdConstraint {
  Eigen::MatrixXd constant;
  std::vector<int> vars;
  std::vector<Eigen::MatrixXd> coefs;
  std::string name;
};

class ConicProgram {
 public:
  int add_variable(const std::string& name, bool nonnegative);
  void set_objective(Sense sense, double constant, std::vector<LinearTerm> terms);
  void add_row(LinearRow row);
  void add_psd(PsdConstraint block);

  int num_variables() const { return static_cast<int>(var_names_.size()); }
  const std::vector<std::string>& var_names() const { return var_names_; }
  bool is_nonnegative(int v) const { return nonneg_.at(v) != 0; }
  Sense sense() const { return sense_; }
  double objective_constant() const { return obj_constant_; }
  const std::vector<LinearTerm>& objective() const { return objective_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<PsdConstraint>& psd_constraints() const { return psd_; }

  // throws std::invalid_argument on undeclared variables or mismatched
  // matrix orders within a PSD constraint
  void validate() const;

  // worst violation of all constraints (rows, PSD blocks, sign flags) at a
  // candidate point, in the program's own units
  double max_violation(const std::vector<double>& x) const;

  // objective value (sense as declared, constant included) at a point
  double objective_value(const std::vector<double>& x) const;

 private:
  std::vector<std::string> var_names_;
  std::vector<char> nonneg_;
  Sense sense_ = Sense::Minimize;
  double obj_constant_ = 0.0;
  std::vector<LinearTerm> objective_;
  std::vector<LinearRow> rows_;
  std::vector<PsdConstraint> psd_;
};

}  // namespace tds
