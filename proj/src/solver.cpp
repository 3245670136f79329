#include "tds/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tds {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near-optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::failure: return "solver-failure";
  }
  return "solver-failure";
}

std::string solver_info(const SolverSettings& s) {
  std::ostringstream os;
  os << "tds-conic-ipm/1.0 hsd-nt-mehrotra feas_tol=" << s.feas_tol << " gap_tol=" << s.gap_tol
     << " max_iter=" << s.max_iterations;
  return os.str();
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInf = std::numeric_limits<double>::infinity();

int svec_dim(int order) { return order * (order + 1) / 2; }

// lower-triangle column-major packing with sqrt(2)-scaled off-diagonals, so
// that dot(svec(A), svec(B)) = <A, B>
void svec_into(const MatrixXd& M, double* out) {
  const int o = static_cast<int>(M.rows());
  int idx = 0;
  for (int j = 0; j < o; ++j) {
    out[idx++] = M(j, j);
    for (int i = j + 1; i < o; ++i) out[idx++] = M(i, j) * kSqrt2;
  }
}

MatrixXd smat(const double* v, int o) {
  MatrixXd M(o, o);
  int idx = 0;
  for (int j = 0; j < o; ++j) {
    M(j, j) = v[idx++];
    for (int i = j + 1; i < o; ++i) {
      const double x = v[idx++] / kSqrt2;
      M(i, j) = x;
      M(j, i) = x;
    }
  }
  return M;
}

// ---------------------------------------------------------------------------
// compiled form:  min c.x  s.t.  A x = b,  G x + s = h,  s in K,
// with K = R+^(sign rows + inequality rows) x PSD(orders...).  x is free.
// ---------------------------------------------------------------------------

struct ConeLayout {
  int nn = 0;                // leading nonnegative coordinates
  std::vector<int> orders;   // PSD block orders
  std::vector<int> offs;     // coordinate offset per PSD block
  int dim = 0;
  double degree = 0.0;  // nn + sum of orders
};

struct GBlock {
  // rows [off, off+dim) of G; for the nonneg slice each row touches one
  // variable with coefficient -1 (sign rows) or holds a dense inequality row
  bool psd = false;
  int off = 0, dim = 0, order = 0;
  std::vector<int> vars;  // columns present in this slice
  MatrixXd cols;          // dim x vars.size()
};

struct Compiled {
  int nx = 0, meq = 0;
  ConeLayout cone;
  std::vector<GBlock> gblocks;
  VectorXd h, beq, c;
  MatrixXd Aeq;
  double obj_sign = 1.0, obj_constant = 0.0;
  VectorXd col_scale;  // user value = col_scale[v] * internal value
  // connected components of variables coupled through G slices
  std::vector<std::vector<int>> comp_vars;
  std::vector<std::vector<int>> comp_blocks;
  std::vector<std::vector<int>> comp_arows;  // equality rows touching the component
  std::vector<int> var_comp, var_pos;
};

// Ruiz equilibration of the compiled data. Row scaling is cone-safe: each
// nonneg coordinate scales independently, a PSD block gets one scalar so the
// cone is preserved. Column scaling changes variable units and is undone at
// extraction. Objective values and the duality gap are invariant.
void equilibrate(Compiled& cp) {
  cp.col_scale = VectorXd::Ones(cp.nx);
  for (int pass = 0; pass < 10; ++pass) {
    // row pass
    for (auto& gb : cp.gblocks) {
      if (gb.vars.empty()) continue;
      if (!gb.psd) {
        for (int r = 0; r < gb.dim; ++r) {
          const double m = gb.cols.row(r).cwiseAbs().maxCoeff();
          if (m > 1e-14) {
            const double sc = 1.0 / std::sqrt(m);
            gb.cols.row(r) *= sc;
            cp.h(gb.off + r) *= sc;
          }
        }
      } else {
        const double m = gb.cols.cwiseAbs().maxCoeff();
        if (m > 1e-14) {
          const double sc = 1.0 / std::sqrt(m);
          gb.cols *= sc;
          cp.h.segment(gb.off, gb.dim) *= sc;
        }
      }
    }
    for (int r = 0; r < cp.meq; ++r) {
      const double m = cp.Aeq.row(r).cwiseAbs().maxCoeff();
      if (m > 1e-14) {
        const double sc = 1.0 / std::sqrt(m);
        cp.Aeq.row(r) *= sc;
        cp.beq(r) *= sc;
      }
    }
    // column pass
    VectorXd colmax = VectorXd::Zero(cp.nx);
    for (const auto& gb : cp.gblocks)
      for (std::size_t i = 0; i < gb.vars.size(); ++i)
        colmax(gb.vars[i]) =
            std::max(colmax(gb.vars[i]), gb.cols.col(static_cast<int>(i)).cwiseAbs().maxCoeff());
    for (int v = 0; v < cp.nx; ++v)
      if (cp.meq > 0) colmax(v) = std::max(colmax(v), cp.Aeq.col(v).cwiseAbs().maxCoeff());
    VectorXd csc = VectorXd::Ones(cp.nx);
    for (int v = 0; v < cp.nx; ++v)
      if (colmax(v) > 1e-14) csc(v) = 1.0 / std::sqrt(colmax(v));
    for (auto& gb : cp.gblocks)
      for (std::size_t i = 0; i < gb.vars.size(); ++i)
        gb.cols.col(static_cast<int>(i)) *= csc(gb.vars[i]);
    for (int v = 0; v < cp.nx; ++v) {
      if (cp.meq > 0) cp.Aeq.col(v) *= csc(v);
      cp.c(v) *= csc(v);
      cp.col_scale(v) *= csc(v);
    }
  }
}

Compiled compile(const ConicProgram& p) {
  p.validate();
  Compiled cp;
  cp.nx = p.num_variables();
  cp.obj_sign = (p.sense() == Sense::Maximize) ? -1.0 : 1.0;
  cp.obj_constant = p.objective_constant();
  cp.c = VectorXd::Zero(cp.nx);
  for (const auto& t : p.objective()) cp.c(t.var) += cp.obj_sign * t.coef;

  int nn = 0;
  std::vector<int> sign_vars;
  for (int v = 0; v < cp.nx; ++v)
    if (p.is_nonnegative(v)) sign_vars.push_back(v);
  std::vector<const LinearRow*> ineq_rows;
  std::vector<const LinearRow*> eq_rows;
  for (const auto& r : p.rows())
    (r.rel == Relation::EQ ? eq_rows : ineq_rows).push_back(&r);
  nn = static_cast<int>(sign_vars.size() + ineq_rows.size());

  cp.cone.nn = nn;
  int off = nn;
  for (const auto& cst : p.psd_constraints()) {
    const int o = static_cast<int>(cst.constant.rows());
    cp.cone.orders.push_back(o);
    cp.cone.offs.push_back(off);
    off += svec_dim(o);
  }
  cp.cone.dim = off;
  cp.cone.degree = cp.cone.nn + std::accumulate(cp.cone.orders.begin(), cp.cone.orders.end(), 0);
  if (cp.cone.dim == 0) throw std::invalid_argument("solve: program has no conic constraints");

  cp.h = VectorXd::Zero(cp.cone.dim);

  // sign rows: s_r = x_v  =>  G(r,v) = -1, h = 0
  {
    GBlock gb;
    gb.off = 0;
    gb.dim = static_cast<int>(sign_vars.size());
    gb.vars = sign_vars;
    gb.cols = MatrixXd::Zero(gb.dim, gb.dim);
    for (int i = 0; i < gb.dim; ++i) gb.cols(i, i) = -1.0;
    if (gb.dim > 0) cp.gblocks.push_back(std::move(gb));
  }
  // inequality rows: GE: s = lhs - rhs; LE: s = rhs - lhs
  if (!ineq_rows.empty()) {
    GBlock gb;
    gb.off = static_cast<int>(sign_vars.size());
    gb.dim = static_cast<int>(ineq_rows.size());
    std::vector<int> vset;
    for (const auto* r : ineq_rows)
      for (const auto& t : r->terms) vset.push_back(t.var);
    std::sort(vset.begin(), vset.end());
    vset.erase(std::unique(vset.begin(), vset.end()), vset.end());
    std::vector<int> pos(cp.nx, -1);
    for (std::size_t i = 0; i < vset.size(); ++i) pos[vset[i]] = static_cast<int>(i);
    gb.vars = vset;
    gb.cols = MatrixXd::Zero(gb.dim, static_cast<int>(vset.size()));
    for (int r = 0; r < gb.dim; ++r) {
      const LinearRow& lr = *ineq_rows[r];
      const double sgn = (lr.rel == Relation::GE) ? -1.0 : 1.0;
      for (const auto& t : lr.terms) gb.cols(r, pos[t.var]) += sgn * t.coef;
      cp.h(gb.off + r) = (lr.rel == Relation::GE) ? -lr.rhs : lr.rhs;
    }
    cp.gblocks.push_back(std::move(gb));
  }
  // PSD constraints: s_block = svec(constant) + sum_m svec(coef_m) x_m
  for (std::size_t q = 0; q < p.psd_constraints().size(); ++q) {
    const PsdConstraint& cst = p.psd_constraints()[q];
    const int o = static_cast<int>(cst.constant.rows());
    GBlock gb;
    gb.psd = true;
    gb.order = o;
    gb.off = cp.cone.offs[q];
    gb.dim = svec_dim(o);
    std::vector<int> vset = cst.vars;
    std::sort(vset.begin(), vset.end());
    vset.erase(std::unique(vset.begin(), vset.end()), vset.end());
    std::vector<int> pos(cp.nx, -1);
    for (std::size_t i = 0; i < vset.size(); ++i) pos[vset[i]] = static_cast<int>(i);
    gb.vars = vset;
    gb.cols = MatrixXd::Zero(gb.dim, static_cast<int>(vset.size()));
    VectorXd tmp(gb.dim);
    for (std::size_t m = 0; m < cst.vars.size(); ++m) {
      const MatrixXd C = 0.5 * (cst.coefs[m] + cst.coefs[m].transpose());
      svec_into(C, tmp.data());
      gb.cols.col(pos[cst.vars[m]]) -= tmp;
    }
    const MatrixXd C0 = 0.5 * (cst.constant + cst.constant.transpose());
    svec_into(C0, tmp.data());
    cp.h.segment(gb.off, gb.dim) = tmp;
    cp.gblocks.push_back(std::move(gb));
  }

  // equality rows
  cp.meq = static_cast<int>(eq_rows.size());
  cp.Aeq = MatrixXd::Zero(cp.meq, cp.nx);
  cp.beq = VectorXd::Zero(cp.meq);
  for (int r = 0; r < cp.meq; ++r) {
    for (const auto& t : eq_rows[r]->terms) cp.Aeq(r, t.var) += t.coef;
    cp.beq(r) = eq_rows[r]->rhs;
  }
  equilibrate(cp);

  // variable components: union-find over shared G slices
  std::vector<int> parent(cp.nx);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& gb : cp.gblocks)
    for (std::size_t i = 1; i < gb.vars.size(); ++i)
      parent[find(gb.vars[i])] = find(gb.vars[0]);
  std::vector<int> root_comp(cp.nx, -1);
  cp.var_comp.assign(cp.nx, -1);
  cp.var_pos.assign(cp.nx, -1);
  for (int v = 0; v < cp.nx; ++v) {
    const int r = find(v);
    if (root_comp[r] == -1) {
      root_comp[r] = static_cast<int>(cp.comp_vars.size());
      cp.comp_vars.emplace_back();
    }
    cp.var_comp[v] = root_comp[r];
    cp.var_pos[v] = static_cast<int>(cp.comp_vars[root_comp[r]].size());
    cp.comp_vars[root_comp[r]].push_back(v);
  }
  cp.comp_blocks.resize(cp.comp_vars.size());
  for (std::size_t g = 0; g < cp.gblocks.size(); ++g)
    if (!cp.gblocks[g].vars.empty())
      cp.comp_blocks[cp.var_comp[cp.gblocks[g].vars[0]]].push_back(static_cast<int>(g));
  cp.comp_arows.resize(cp.comp_vars.size());
  for (std::size_t cc = 0; cc < cp.comp_vars.size(); ++cc) {
    for (int r = 0; r < cp.meq; ++r) {
      bool touch = false;
      for (int v : cp.comp_vars[cc])
        if (cp.Aeq(r, v) != 0.0) {
          touch = true;
          break;
        }
      if (touch) cp.comp_arows[cc].push_back(r);
    }
  }
  return cp;
}

// ---------------------------------------------------------------------------
// cone operations
// ---------------------------------------------------------------------------

struct NTScale {
  VectorXd w;       // nonneg scaling
  VectorXd lam_nn;  // nonneg scaled point
  std::vector<MatrixXd> R, Rinv;
  std::vector<VectorXd> lam;
};

MatrixXd chol_psd(const MatrixXd& X) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double bump = 1e-14 * (1.0 + X.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<MatrixXd> retry(X + bump * std::pow(10.0, attempt) * MatrixXd::Identity(X.rows(), X.cols()));
    if (retry.info() == Eigen::Success) return retry.matrixL();
  }
  throw std::runtime_error("interior-point scaling: Cholesky failed");
}

// scaling for the pair (s, z): Rinv * S * Rinv' = R' * Z * R = diag(lam)
NTScale compute_nt(const ConeLayout& cone, const VectorXd& s, const VectorXd& z) {
  NTScale nt;
  nt.w = (s.head(cone.nn).array() / z.head(cone.nn).array()).sqrt();
  nt.lam_nn = (s.head(cone.nn).array() * z.head(cone.nn).array()).sqrt();
  nt.R.resize(cone.orders.size());
  nt.Rinv.resize(cone.orders.size());
  nt.lam.resize(cone.orders.size());
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const int o = cone.orders[b];
    const MatrixXd S = smat(s.data() + cone.offs[b], o);
    const MatrixXd Z = smat(z.data() + cone.offs[b], o);
    const MatrixXd Ls = chol_psd(S);
    const MatrixXd Lz = chol_psd(Z);
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd sig = svd.singularValues();
    const VectorXd isqrt = sig.array().sqrt().inverse();
    nt.R[b] = Ls * svd.matrixV() * isqrt.asDiagonal();
    nt.Rinv[b] = isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    nt.lam[b] = sig;
  }
  return nt;
}

enum class ScaleKind { T, Tstar, U };

// T(v)    : w*v on the nonneg part, svec(R' M R) per PSD block
// Tstar(v): w*v,                    svec(R M R')
// U(v)    : v/w,                    svec(Rinv M Rinv')
VectorXd apply_scale(const ConeLayout& cone, const NTScale& nt, ScaleKind kind, const VectorXd& v) {
  VectorXd out(cone.dim);
  if (kind == ScaleKind::U)
    out.head(cone.nn) = v.head(cone.nn).array() / nt.w.array();
  else
    out.head(cone.nn) = v.head(cone.nn).array() * nt.w.array();
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const int o = cone.orders[b];
    const MatrixXd M = smat(v.data() + cone.offs[b], o);
    MatrixXd res;
    if (kind == ScaleKind::T)
      res = nt.R[b].transpose() * M * nt.R[b];
    else if (kind == ScaleKind::Tstar)
      res = nt.R[b] * M * nt.R[b].transpose();
    else
      res = nt.Rinv[b] * M * nt.Rinv[b].transpose();
    res = 0.5 * (res + res.transpose()).eval();
    svec_into(res, out.data() + cone.offs[b]);
  }
  return out;
}

// inverse of T: v/w on the nonneg part, svec(Rinv' M Rinv) per PSD block
VectorXd apply_Tinv(const ConeLayout& cone, const NTScale& nt, const VectorXd& v) {
  VectorXd out(cone.dim);
  out.head(cone.nn) = v.head(cone.nn).array() / nt.w.array();
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const int o = cone.orders[b];
    const MatrixXd M = smat(v.data() + cone.offs[b], o);
    MatrixXd res = nt.Rinv[b].transpose() * M * nt.Rinv[b];
    res = 0.5 * (res + res.transpose()).eval();
    svec_into(res, out.data() + cone.offs[b]);
  }
  return out;
}

// solve (lam_i + lam_j)/2 circ Z = D in scaled space
VectorXd hlam_inverse(const ConeLayout& cone, const NTScale& nt, const VectorXd& d) {
  VectorXd out(cone.dim);
  out.head(cone.nn) = d.head(cone.nn).array() / nt.lam_nn.array();
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const int o = cone.orders[b];
    MatrixXd D = smat(d.data() + cone.offs[b], o);
    for (int i = 0; i < o; ++i)
      for (int j = 0; j < o; ++j) D(i, j) /= 0.5 * (nt.lam[b](i) + nt.lam[b](j));
    svec_into(D, out.data() + cone.offs[b]);
  }
  return out;
}

// symmetrized product of two scaled-space points (for the corrector)
VectorXd jordan_product(const ConeLayout& cone, const VectorXd& a, const VectorXd& b) {
  VectorXd out(cone.dim);
  out.head(cone.nn) = a.head(cone.nn).array() * b.head(cone.nn).array();
  for (std::size_t bi = 0; bi < cone.orders.size(); ++bi) {
    const int o = cone.orders[bi];
    const MatrixXd A = smat(a.data() + cone.offs[bi], o);
    const MatrixXd B = smat(b.data() + cone.offs[bi], o);
    const MatrixXd P = 0.5 * (A * B + B * A);
    svec_into(P, out.data() + cone.offs[bi]);
  }
  return out;
}

VectorXd cone_identity(const ConeLayout& cone) {
  VectorXd e = VectorXd::Zero(cone.dim);
  e.head(cone.nn).setOnes();
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const MatrixXd I = MatrixXd::Identity(cone.orders[b], cone.orders[b]);
    svec_into(I, e.data() + cone.offs[b]);
  }
  return e;
}

double max_step(const ConeLayout& cone, const VectorXd& x, const VectorXd& dx) {
  double alpha = kInf;
  for (int i = 0; i < cone.nn; ++i)
    if (dx(i) < 0.0) alpha = std::min(alpha, -x(i) / dx(i));
  for (std::size_t b = 0; b < cone.orders.size(); ++b) {
    const int o = cone.orders[b];
    const MatrixXd X = smat(x.data() + cone.offs[b], o);
    const MatrixXd DX = smat(dx.data() + cone.offs[b], o);
    const MatrixXd L = chol_psd(X);
    const MatrixXd W1 = L.triangularView<Eigen::Lower>().solve(DX);
    const MatrixXd W = L.triangularView<Eigen::Lower>().solve(W1.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

VectorXd G_times(const Compiled& cp, const VectorXd& x) {
  VectorXd out = VectorXd::Zero(cp.cone.dim);
  for (const auto& gb : cp.gblocks) {
    if (gb.vars.empty()) continue;
    VectorXd xs(gb.vars.size());
    for (std::size_t i = 0; i < gb.vars.size(); ++i) xs(static_cast<int>(i)) = x(gb.vars[i]);
    out.segment(gb.off, gb.dim) += gb.cols * xs;
  }
  return out;
}

VectorXd Gt_times(const Compiled& cp, const VectorXd& v) {
  VectorXd out = VectorXd::Zero(cp.nx);
  for (const auto& gb : cp.gblocks) {
    if (gb.vars.empty()) continue;
    const VectorXd r = gb.cols.transpose() * v.segment(gb.off, gb.dim);
    for (std::size_t i = 0; i < gb.vars.size(); ++i) out(gb.vars[i]) += r(static_cast<int>(i));
  }
  return out;
}

VectorXd B_times(const Compiled& cp, const std::vector<MatrixXd>& scaled_cols, const VectorXd& x) {
  VectorXd out = VectorXd::Zero(cp.cone.dim);
  for (std::size_t g = 0; g < cp.gblocks.size(); ++g) {
    const GBlock& gb = cp.gblocks[g];
    if (gb.vars.empty()) continue;
    VectorXd xs(gb.vars.size());
    for (std::size_t i = 0; i < gb.vars.size(); ++i) xs(static_cast<int>(i)) = x(gb.vars[i]);
    out.segment(gb.off, gb.dim) += scaled_cols[g] * xs;
  }
  return out;
}

VectorXd Bt_times(const Compiled& cp, const std::vector<MatrixXd>& scaled_cols, const VectorXd& v) {
  VectorXd out = VectorXd::Zero(cp.nx);
  for (std::size_t g = 0; g < cp.gblocks.size(); ++g) {
    const GBlock& gb = cp.gblocks[g];
    if (gb.vars.empty()) continue;
    const VectorXd r = scaled_cols[g].transpose() * v.segment(gb.off, gb.dim);
    for (std::size_t i = 0; i < gb.vars.size(); ++i) out(gb.vars[i]) += r(static_cast<int>(i));
  }
  return out;
}

// per-iteration factorization: scaled constraint operator B = U o G (per
// block: columns pushed through the single-R scaling, so only sqrt of the
// scaling's condition number enters), N = B'B as a Gram matrix
// (block-diagonal over variable components), Schur complement Aeq N^-1 Aeq'
struct KktFactor {
  std::vector<MatrixXd> scaled_cols;  // one per gblock, aligned with cp.gblocks
  std::vector<Eigen::LLT<MatrixXd>> comp_llt;
  std::vector<MatrixXd> comp_N;  // kept for iterative refinement
  Eigen::LDLT<MatrixXd> schur;
  MatrixXd schur_mat;
  bool ok = false;
};

KktFactor factor_kkt(const Compiled& cp, const ConeLayout& cone, const NTScale& nt) {
  KktFactor f;
  const std::size_t ncomp = cp.comp_vars.size();
  f.comp_llt.resize(ncomp);
  f.scaled_cols.resize(cp.gblocks.size());
  std::vector<MatrixXd> Ncomp(ncomp);
  for (std::size_t cc = 0; cc < ncomp; ++cc)
    Ncomp[cc] = MatrixXd::Zero(static_cast<int>(cp.comp_vars[cc].size()),
                               static_cast<int>(cp.comp_vars[cc].size()));
  for (std::size_t g = 0; g < cp.gblocks.size(); ++g) {
    const GBlock& gb = cp.gblocks[g];
    if (gb.vars.empty()) continue;
    const int cc = cp.var_comp[gb.vars[0]];
    MatrixXd& SCols = f.scaled_cols[g];
    SCols.resize(gb.dim, gb.cols.cols());
    if (!gb.psd) {
      for (int r = 0; r < gb.dim; ++r) SCols.row(r) = gb.cols.row(r) / nt.w(gb.off + r);
    } else {
      int bidx = -1;
      for (std::size_t b = 0; b < cone.offs.size(); ++b)
        if (cone.offs[b] == gb.off) bidx = static_cast<int>(b);
      for (int cidx = 0; cidx < gb.cols.cols(); ++cidx) {
        const MatrixXd M = smat(gb.cols.col(cidx).data(), gb.order);
        MatrixXd res = nt.Rinv[bidx] * M * nt.Rinv[bidx].transpose();
        res = 0.5 * (res + res.transpose()).eval();
        svec_into(res, SCols.col(cidx).data());
      }
    }
    const MatrixXd contrib = SCols.transpose() * SCols;
    for (std::size_t a = 0; a < gb.vars.size(); ++a)
      for (std::size_t b = 0; b < gb.vars.size(); ++b)
        Ncomp[cc](cp.var_pos[gb.vars[a]], cp.var_pos[gb.vars[b]]) +=
            contrib(static_cast<int>(a), static_cast<int>(b));
  }
  for (std::size_t cc = 0; cc < ncomp; ++cc) {
    // variables untouched by any cone slice are pinned only by equalities;
    // a tiny diagonal keeps the elimination well defined
    for (int i = 0; i < Ncomp[cc].rows(); ++i)
      if (Ncomp[cc](i, i) == 0.0) Ncomp[cc](i, i) = 1e-10;
    f.comp_llt[cc].compute(Ncomp[cc]);
    if (f.comp_llt[cc].info() != Eigen::Success) {
      Ncomp[cc].diagonal().array() += 1e-12 * (1.0 + Ncomp[cc].diagonal().maxCoeff());
      f.comp_llt[cc].compute(Ncomp[cc]);
      if (f.comp_llt[cc].info() != Eigen::Success) return f;
    }
  }
  f.comp_N = std::move(Ncomp);
  if (cp.meq > 0) {
    MatrixXd Schur = MatrixXd::Zero(cp.meq, cp.meq);
    for (std::size_t cc = 0; cc < ncomp; ++cc) {
      const auto& rows = cp.comp_arows[cc];
      if (rows.empty()) continue;
      const int nr = static_cast<int>(rows.size());
      const int nv = static_cast<int>(cp.comp_vars[cc].size());
      MatrixXd Asub(nr, nv);
      for (int r = 0; r < nr; ++r)
        for (int v = 0; v < nv; ++v) Asub(r, v) = cp.Aeq(rows[r], cp.comp_vars[cc][v]);
      const MatrixXd K = f.comp_llt[cc].solve(Asub.transpose());
      const MatrixXd S = Asub * K;
      for (int r = 0; r < nr; ++r)
        for (int q = 0; q < nr; ++q) Schur(rows[r], rows[q]) += S(r, q);
    }
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
      if (attempt > 0)
        Schur.diagonal().array() += 1e-12 * std::pow(100.0, attempt - 1) * (1.0 + Schur.diagonal().maxCoeff());
      f.schur.compute(Schur);
      ok = f.schur.info() == Eigen::Success;
    }
    if (!ok) return f;
    f.schur_mat = std::move(Schur);
  }
  f.ok = true;
  return f;
}

VectorXd comp_solve(const Compiled& cp, const KktFactor& f, const VectorXd& p) {
  VectorXd out(cp.nx);
  for (std::size_t cc = 0; cc < cp.comp_vars.size(); ++cc) {
    const int nv = static_cast<int>(cp.comp_vars[cc].size());
    VectorXd sub(nv);
    for (int v = 0; v < nv; ++v) sub(v) = p(cp.comp_vars[cc][v]);
    sub = f.comp_llt[cc].solve(sub);
    for (int v = 0; v < nv; ++v) out(cp.comp_vars[cc][v]) = sub(v);
  }
  return out;
}

VectorXd comp_apply(const Compiled& cp, const KktFactor& f, const VectorXd& v) {
  VectorXd out(cp.nx);
  for (std::size_t cc = 0; cc < cp.comp_vars.size(); ++cc) {
    const int nv = static_cast<int>(cp.comp_vars[cc].size());
    VectorXd sub(nv);
    for (int v2 = 0; v2 < nv; ++v2) sub(v2) = v(cp.comp_vars[cc][v2]);
    sub = f.comp_N[cc] * sub;
    for (int v2 = 0; v2 < nv; ++v2) out(cp.comp_vars[cc][v2]) = sub(v2);
  }
  return out;
}

// solve [N A'; A 0] (dx, dy) = (p, q) with iterative refinement: the KKT
// matrix turns ill conditioned near degenerate optimal faces and the refined
// solve keeps the Newton directions accurate there
void kkt_solve(const Compiled& cp, const KktFactor& f, const VectorXd& p, const VectorXd& q,
               VectorXd& dx, VectorXd& dy) {
  auto base_solve = [&](const VectorXd& pp, const VectorXd& qq, VectorXd& ox, VectorXd& oy) {
    if (cp.meq == 0) {
      ox = comp_solve(cp, f, pp);
      oy.resize(0);
      return;
    }
    const VectorXd Ninv_p = comp_solve(cp, f, pp);
    oy = f.schur.solve(cp.Aeq * Ninv_p - qq);
    ox = comp_solve(cp, f, pp - cp.Aeq.transpose() * oy);
  };
  base_solve(p, q, dx, dy);
  for (int pass = 0; pass < 2; ++pass) {
    VectorXd rp = p - comp_apply(cp, f, dx);
    VectorXd rq;
    if (cp.meq > 0) {
      rp -= cp.Aeq.transpose() * dy;
      rq = q - cp.Aeq * dx;
    } else {
      rq.resize(0);
    }
    VectorXd ex, ey;
    base_solve(rp, rq, ex, ey);
    dx += ex;
    if (cp.meq > 0) dy += ey;
  }
}

}  // namespace

SolverReport solve(const ConicProgram& program, const SolverSettings& settings) {
  const auto t_start = std::chrono::steady_clock::now();
  SolverReport rep;
  rep.objective = std::numeric_limits<double>::quiet_NaN();

  const Compiled cp = compile(program);
  const ConeLayout& cone = cp.cone;
  const double hbnorm = 1.0 + std::hypot(cp.h.norm(), cp.beq.norm());
  const double cnorm = 1.0 + cp.c.norm();

  VectorXd x = VectorXd::Zero(cp.nx), y = VectorXd::Zero(cp.meq);
  VectorXd s = cone_identity(cone), z = cone_identity(cone);
  double tau = 1.0, kappa = 1.0;

  double best_score = kInf, best_tau = 1.0, best_pres = kInf, best_dres = kInf, best_gap = kInf,
         best_relgap = kInf;
  double best_primal_score = kInf, best_primal_tau = 1.0, best_primal_pres = kInf,
         best_primal_dres = kInf, best_primal_gap = kInf;
  int stall_count = 0;
  VectorXd best_x = x;
  VectorXd best_primal_x = x;

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  auto finish = [&](SolveStatus st, const VectorXd& xv, double tv, double pres, double dres,
                    double gap_abs, int iters) {
    rep.status = st;
    rep.iterations = iters;
    rep.primal_residual = pres;
    rep.dual_residual = dres;
    rep.gap = gap_abs;
    if (st == SolveStatus::optimal || st == SolveStatus::near_optimal ||
        st == SolveStatus::failure) {
      // A stalled run still exposes its best iterate: callers that can
      // re-certify a candidate point independently (anything with its own
      // audit) get to salvage it, while bound consumers keep gating on the
      // status. For infeasible/unbounded the iterate is a certificate ray,
      // not a point, so nothing is exposed.
      rep.solution.assign(cp.nx, 0.0);
      for (int v = 0; v < cp.nx; ++v) rep.solution[v] = cp.col_scale(v) * xv(v) / tv;
      rep.objective = program.objective_value(rep.solution);
      rep.max_violation = program.max_violation(rep.solution);
    } else {
      rep.max_violation = kInf;
    }
    rep.solve_time_seconds = elapsed();
    return rep;
  };

  int iter = 0;
  for (;; ++iter) {
    const VectorXd r1 = G_times(cp, x) + s - cp.h * tau;           // cone rows
    const VectorXd r2 = cp.Aeq * x - cp.beq * tau;                 // equality rows
    const VectorXd r3 = cp.Aeq.transpose() * y + Gt_times(cp, z) + cp.c * tau;
    const double r4 = -cp.c.dot(x) - cp.beq.dot(y) - cp.h.dot(z) - kappa;
    const double mu = (s.dot(z) + tau * kappa) / (cone.degree + 1.0);

    const double pres = std::hypot(r1.norm(), r2.norm()) / tau / hbnorm;
    const double dres = r3.norm() / tau / cnorm;
    const double pobj = cp.c.dot(x) / tau;
    const double dobj = -(cp.beq.dot(y) + cp.h.dot(z)) / tau;
    const double gap_abs = s.dot(z) / (tau * tau);
    const double relgap = gap_abs / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

    static const bool trace = std::getenv("TDS_IPM_TRACE") != nullptr;
    if (trace)
      std::fprintf(stderr, "iter %3d mu=%9.2e pres=%9.2e dres=%9.2e relgap=%9.2e tau=%9.2e kappa=%9.2e\n",
                   iter, mu, pres, dres, relgap, tau, kappa);

    const double score = std::max({pres, dres, relgap});
    if (score < 0.9 * best_score)
      stall_count = 0;
    else
      ++stall_count;
    if (score < best_score) {
      best_score = score;
      best_x = x;
      best_tau = tau;
      best_pres = pres;
      best_dres = dres;
      best_gap = gap_abs;
      best_relgap = relgap;
    }
    // The best primal iterate is tracked separately: a salvaged failure
    // solution is only ever consumed by callers that re-certify the point
    // themselves, and those read x alone, so primal feasibility and a
    // converged objective are what count -- not the reconstructed duals,
    // which are the first thing to stall. Iterates with mu < 0 have slipped
    // outside the cone and are never candidates.
    if (mu >= 0.0) {
      const double pscore = std::max(pres, std::abs(relgap));
      if (pscore < best_primal_score) {
        best_primal_score = pscore;
        best_primal_x = x;
        best_primal_tau = tau;
        best_primal_pres = pres;
        best_primal_dres = dres;
        best_primal_gap = gap_abs;
      }
    }
    // early iterations legitimately trade gap for feasibility; only use a
    // short patience once the endgame (small best score) is reached
    if (stall_count >= (best_score <= 1e-4 ? 10 : 40)) break;

    if (pres <= settings.feas_tol && dres <= settings.feas_tol && relgap <= settings.gap_tol)
      return finish(SolveStatus::optimal, x, tau, pres, dres, gap_abs, iter);

    // Farkas certificates. primal infeasible: A'y + G'z = 0, z in K*, b'y + h'z < 0
    const double omega = -(cp.beq.dot(y) + cp.h.dot(z));
    if (omega > settings.feas_tol &&
        (cp.Aeq.transpose() * y + Gt_times(cp, z)).norm() <= settings.feas_tol * omega * cnorm)
      return finish(SolveStatus::infeasible, x, tau, pres, dres, gap_abs, iter);
    // dual infeasible (primal unbounded): Gx + s = 0, Ax = 0, c'x < 0
    const double nu = -cp.c.dot(x);
    if (nu > settings.feas_tol &&
        std::hypot((G_times(cp, x) + s).norm(), (cp.Aeq * x).norm()) <=
            settings.feas_tol * nu * hbnorm)
      return finish(SolveStatus::unbounded, x, tau, pres, dres, gap_abs, iter);

    if (iter >= settings.max_iterations ||
        (settings.time_limit_seconds > 0.0 && elapsed() > settings.time_limit_seconds))
      break;

    NTScale nt;
    KktFactor f;
    try {
      nt = compute_nt(cone, s, z);
      f = factor_kkt(cp, cone, nt);
    } catch (const std::runtime_error&) {
      break;
    }
    if (!f.ok) break;

    // scaled-space elimination: with zeta = T(dz) the complementarity and
    // cone rows reduce to zeta = B dx + Hlam^-1(d) + eta U(r1) - U(h) dtau,
    // and the dual row becomes A' dy + B' zeta + c dtau = -eta r3, keeping
    // every product at the single-R conditioning level
    const VectorXd htilde = apply_scale(cone, nt, ScaleKind::U, cp.h);
    const VectorXd Ur1 = apply_scale(cone, nt, ScaleKind::U, r1);
    VectorXd dx_tau, dy_tau;
    kkt_solve(cp, f, Bt_times(cp, f.scaled_cols, htilde) - cp.c, cp.beq, dx_tau, dy_tau);
    const VectorXd zeta_tau = B_times(cp, f.scaled_cols, dx_tau) - htilde;
    const double denom =
        -cp.c.dot(dx_tau) - cp.beq.dot(dy_tau) - htilde.dot(zeta_tau) + kappa / tau;

    VectorXd lam_vec(cone.dim);
    lam_vec.head(cone.nn) = nt.lam_nn;
    for (std::size_t b = 0; b < cone.orders.size(); ++b) {
      const MatrixXd L = nt.lam[b].asDiagonal();
      svec_into(L, lam_vec.data() + cone.offs[b]);
    }
    const VectorXd lam_sq = jordan_product(cone, lam_vec, lam_vec);

    struct Direction {
      VectorXd dx, dy, dz, ds, zeta;  // zeta = T(dz), kept for the corrector
      double dtau = 0.0, dkappa = 0.0;
    };
    auto solve_direction = [&](double eta, const VectorXd& dcomp, double dtau_rhs) {
      Direction d;
      const VectorXd Urhs = hlam_inverse(cone, nt, dcomp) + eta * Ur1;
      const VectorXd rhs_x = -eta * r3 - Bt_times(cp, f.scaled_cols, Urhs);
      const VectorXd rhs_y = -eta * r2;
      VectorXd dx_c, dy_c;
      kkt_solve(cp, f, rhs_x, rhs_y, dx_c, dy_c);
      const VectorXd zeta_c = B_times(cp, f.scaled_cols, dx_c) + Urhs;
      const double num =
          -eta * r4 + cp.c.dot(dx_c) + cp.beq.dot(dy_c) + htilde.dot(zeta_c) + dtau_rhs / tau;
      d.dtau = num / denom;
      d.dx = dx_c + d.dtau * dx_tau;
      d.dy = dy_c + d.dtau * dy_tau;
      d.zeta = zeta_c + d.dtau * zeta_tau;
      d.dz = apply_Tinv(cone, nt, d.zeta);
      d.ds = -eta * r1 - G_times(cp, d.dx) + cp.h * d.dtau;
      d.dkappa = (dtau_rhs - kappa * d.dtau) / tau;
      return d;
    };

    // predictor
    const Direction aff = solve_direction(1.0, -lam_sq, -tau * kappa);
    double alpha_aff = std::min({max_step(cone, s, aff.ds), max_step(cone, z, aff.dz),
                                 aff.dtau < 0 ? -tau / aff.dtau : kInf,
                                 aff.dkappa < 0 ? -kappa / aff.dkappa : kInf});
    alpha_aff = std::min(1.0, 0.99 * alpha_aff);
    const double mu_aff = ((s + alpha_aff * aff.ds).dot(z + alpha_aff * aff.dz) +
                           (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa)) /
                          (cone.degree + 1.0);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // corrector (aff.zeta is already the scaled z-step)
    const VectorXd ds_scaled = apply_scale(cone, nt, ScaleKind::U, aff.ds);
    const VectorXd corr = jordan_product(cone, ds_scaled, aff.zeta);
    const VectorXd dcomp = sigma * mu * cone_identity(cone) - lam_sq - corr;
    const double dtau_rhs = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
    const Direction dir = solve_direction(1.0 - sigma, dcomp, dtau_rhs);

    double alpha = std::min({max_step(cone, s, dir.ds), max_step(cone, z, dir.dz),
                             dir.dtau < 0 ? -tau / dir.dtau : kInf,
                             dir.dkappa < 0 ? -kappa / dir.dkappa : kInf});
    alpha = std::min(1.0, 0.99 * alpha);
    if (!std::isfinite(alpha) || alpha < 1e-9) break;

    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
    if (!(tau > 0.0) || !s.allFinite() || !z.allFinite() || !x.allFinite()) break;
    // the embedding is homogeneous: renormalize to tau = 1 each iteration so
    // complementarity stays measurable in hatted units even when the original
    // problem's solution norm is large (which otherwise drives tau tiny)
    const double inv_tau = 1.0 / tau;
    x *= inv_tau;
    y *= inv_tau;
    z *= inv_tau;
    s *= inv_tau;
    kappa *= inv_tau;
    tau = 1.0;
  }

  // budget exhausted or numerical stall: classify the best iterate
  if (best_pres <= 1e-5 && best_dres <= 1e-5 && best_relgap <= 1e-4)
    return finish(SolveStatus::near_optimal, best_x, best_tau, best_pres, best_dres, best_gap, iter);
  return finish(SolveStatus::failure, best_primal_x, best_primal_tau, best_primal_pres,
                best_primal_dres, best_primal_gap, iter);
}

}  // namespace tds
