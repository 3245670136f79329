#include "tds/conic.hpp"

#include <cmath>
#include <stdexcept>

namespace tds {

int ConicProgram::add_variable(const std::string& name, bool nonnegative) {
  var_names_.push_back(name);
  nonneg_.push_back(nonnegative ? 1 : 0);
  return static_cast<int>(var_names_.size()) - 1;
}

void ConicProgram::set_objective(Sense sense, double constant, std::vector<LinearTerm> terms) {
  sense_ = sense;
  obj_constant_ = constant;
  objective_ = std::move(terms);
}

void ConicProgram::add_row(LinearRow row) { rows_.push_back(std::move(row)); }

void ConicProgram::add_psd(PsdConstraint block) { psd_.push_back(std::move(block)); }

namespace {

void check_terms(const std::vector<LinearTerm>& terms, int nvars, const char* where) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= nvars)
      throw std::invalid_argument(std::string("conic program: undeclared variable in ") + where);
    if (!std::isfinite(t.coef))
      throw std::invalid_argument(std::string("conic program: non-finite coefficient in ") + where);
  }
}

}  // namespace

void ConicProgram::validate() const {
  const int nvars = num_variables();
  check_terms(objective_, nvars, "objective");
  for (const auto& r : rows_) check_terms(r.terms, nvars, r.name.empty() ? "row" : r.name.c_str());
  for (const auto& p : psd_) {
    const auto order = p.constant.rows();
    if (p.constant.cols() != order)
      throw std::invalid_argument("conic program: PSD constant matrix not square");
    if (p.vars.size() != p.coefs.size())
      throw std::invalid_argument("conic program: PSD vars/coefs length mismatch");
    for (std::size_t m = 0; m < p.vars.size(); ++m) {
      if (p.vars[m] < 0 || p.vars[m] >= nvars)
        throw std::invalid_argument("conic program: undeclared variable in PSD constraint");
      if (p.coefs[m].rows() != order || p.coefs[m].cols() != order)
        throw std::invalid_argument("conic program: PSD coefficient order mismatch");
    }
  }
}

double ConicProgram::max_violation(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != num_variables())
    throw std::invalid_argument("max_violation: point has wrong dimension");
  double worst = 0.0;
  for (int v = 0; v < num_variables(); ++v)
    if (nonneg_[v]) worst = std::max(worst, -x[v]);
  for (const auto& r : rows_) {
    double lhs = 0.0;
    for (const auto& t : r.terms) lhs += t.coef * x[t.var];
    switch (r.rel) {
      case Relation::LE: worst = std::max(worst, lhs - r.rhs); break;
      case Relation::GE: worst = std::max(worst, r.rhs - lhs); break;
      case Relation::EQ: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  for (const auto& p : psd_) {
    Eigen::MatrixXd M = p.constant;
    for (std::size_t m = 0; m < p.vars.size(); ++m) M += x[p.vars[m]] * p.coefs[m];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()),
                                                       Eigen::EigenvaluesOnly);
    worst = std::max(worst, -eig.eigenvalues().minCoeff());
  }
  return worst;
}

double ConicProgram::objective_value(const std::vector<double>& x) const {
  double val = obj_constant_;
  for (const auto& t : objective_) val += t.coef * x[t.var];
  return val;
}

}  // namespace tds
