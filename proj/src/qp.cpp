#include "srmpc/qp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "srmpc/error.hpp"

namespace srmpc {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kEqualityTol = 1e-9;
constexpr double kDivisionTol = 1e-20;

bool is_equality(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= kEqualityTol * std::max(1.0, std::abs(lo));
}

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double clip_scaling(double norm) {
  if (norm < kMinScaling) return 1.0;
  return std::min(norm, kMaxScaling);
}

// Column-wise infinity norms of a sparse matrix.
VectorXd col_inf_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.cols());
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) out[j] = std::max(out[j], std::abs(it.value()));
  }
  return out;
}

VectorXd row_inf_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.rows());
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
    }
  }
  return out;
}

VectorXd project(const VectorXd& v, const VectorXd& lo, const VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

// Problem data after Ruiz equilibration:
//   Hs = c D H D, gs = c D g, As = E A D, ls = E l, us = E u.
struct ScaledProblem {
  SparseMatrix H;
  VectorXd g;
  SparseMatrix A;
  VectorXd l;
  VectorXd u;
  VectorXd D;
  VectorXd E;
  VectorXd D_inv;
  VectorXd E_inv;
  double c = 1.0;
  double c_inv = 1.0;
};

ScaledProblem equilibrate(const QpProblem& p, int iterations) {
  ScaledProblem s;
  const Index n = p.num_variables();
  const Index m = p.num_constraints();
  s.H = p.H;
  s.g = p.g;
  s.A = p.A;
  s.D = VectorXd::Ones(n);
  s.E = VectorXd::Ones(m);

  for (int it = 0; it < iterations; ++it) {
    VectorXd d_step = col_inf_norms(s.H);
    if (m > 0) d_step = d_step.cwiseMax(col_inf_norms(s.A));
    for (Index j = 0; j < n; ++j) d_step[j] = 1.0 / std::sqrt(clip_scaling(d_step[j]));
    VectorXd e_step = row_inf_norms(s.A);
    for (Index i = 0; i < m; ++i) e_step[i] = 1.0 / std::sqrt(clip_scaling(e_step[i]));

    s.H = d_step.asDiagonal() * s.H * d_step.asDiagonal();
    s.A = e_step.asDiagonal() * s.A * d_step.asDiagonal();
    s.g = d_step.cwiseProduct(s.g);
    s.D = s.D.cwiseProduct(d_step);
    s.E = s.E.cwiseProduct(e_step);

    const VectorXd h_cols = col_inf_norms(s.H);
    const double mean_h = n > 0 ? h_cols.mean() : 0.0;
    const double cost_norm = std::max(clip_scaling(mean_h), clip_scaling(inf_norm(s.g)));
    const double c_step = 1.0 / cost_norm;
    s.H *= c_step;
    s.g *= c_step;
    s.c *= c_step;
  }
  s.l = s.E.cwiseProduct(p.l);
  s.u = s.E.cwiseProduct(p.u);
  s.D_inv = s.D.cwiseInverse();
  s.E_inv = s.E.cwiseInverse();
  s.c_inv = 1.0 / s.c;
  return s;
}

class AdmmSolver {
 public:
  AdmmSolver(const QpProblem& problem, const QpSettings& settings)
      : problem_(problem), settings_(settings), scaled_(equilibrate(problem, settings.scaling_iterations)) {
    n_ = problem.num_variables();
    m_ = problem.num_constraints();
    x_ = VectorXd::Zero(n_);
    z_ = VectorXd::Zero(m_);
    y_ = VectorXd::Zero(m_);
    rho_ = settings.rho;
    update_rho_vector();
    factorize();
  }

  void warm(const WarmStart& start) {
    x_ = scaled_.D_inv.cwiseProduct(start.z);
    y_ = scaled_.c * scaled_.E_inv.cwiseProduct(start.y);
    z_ = scaled_.A * x_;
  }

  QpSolution run() {
    QpSolution out;
    double best_merit = kInf;
    VectorXd best_x = x_;
    VectorXd best_y = y_;
    Residuals best_res;

    for (int iter = 1; iter <= settings_.max_iter; ++iter) {
      const VectorXd x_prev = x_;
      const VectorXd y_prev = y_;

      VectorXd rhs = settings_.sigma * x_ - scaled_.g;
      if (m_ > 0) rhs += scaled_.A.transpose() * (rho_vec_.cwiseProduct(z_) - y_);
      const VectorXd x_tilde = kkt_.solve(rhs);
      const VectorXd z_tilde = scaled_.A * x_tilde;
      x_ = settings_.alpha * x_tilde + (1.0 - settings_.alpha) * x_prev;
      const VectorXd z_relaxed = settings_.alpha * z_tilde + (1.0 - settings_.alpha) * z_;
      z_ = project(z_relaxed + y_.cwiseQuotient(rho_vec_), scaled_.l, scaled_.u);
      y_ = y_ + rho_vec_.cwiseProduct(z_relaxed - z_);

      const Residuals res = residuals(x_, z_, y_);
      out.iterations = iter;
      const double merit = std::max(res.primal / res.eps_primal, res.dual / res.eps_dual);
      if (merit < best_merit) {
        best_merit = merit;
        best_x = x_;
        best_y = y_;
        best_res = res;
      }
      if (res.primal <= res.eps_primal && res.dual <= res.eps_dual) {
        out.status = QpStatus::Solved;
        return finish(out, x_, y_, res);
      }
      if (primal_infeasible(y_ - y_prev)) {
        out.status = QpStatus::PrimalInfeasible;
        return finish_certificate(out, res);
      }
      if (dual_infeasible(x_ - x_prev)) {
        out.status = QpStatus::DualInfeasible;
        return finish_certificate(out, res);
      }
      if (settings_.adaptive_rho && settings_.adaptive_rho_interval > 0 &&
          iter % settings_.adaptive_rho_interval == 0) {
        adapt_rho();
      }
    }
    out.status = QpStatus::MaxIterations;
    return finish(out, best_x, best_y, best_res);
  }

 private:
  struct Residuals {
    double primal = kInf;
    double dual = kInf;
    double eps_primal = 1.0;
    double eps_dual = 1.0;
  };

  void update_rho_vector() {
    rho_vec_.resize(m_);
    for (Index i = 0; i < m_; ++i) {
      const double lo = scaled_.l[i];
      const double hi = scaled_.u[i];
      if (std::isinf(lo) && std::isinf(hi)) {
        rho_vec_[i] = kRhoMin;
      } else if (is_equality(lo, hi)) {
        rho_vec_[i] = kRhoEqualityScale * rho_;
      } else {
        rho_vec_[i] = rho_;
      }
    }
  }

  void factorize() {
    SparseMatrix K = scaled_.H;
    if (m_ > 0) K += SparseMatrix(scaled_.A.transpose() * rho_vec_.asDiagonal() * scaled_.A);
    SparseMatrix shift(n_, n_);
    shift.setIdentity();
    K += settings_.sigma * shift;
    kkt_.compute(K);
    if (kkt_.info() != Eigen::Success) throw Error("qp: KKT factorization failed");
  }

  Residuals residuals(const VectorXd& x, const VectorXd& z, const VectorXd& y) const {
    Residuals r;
    const VectorXd Ax = scaled_.A * x;
    r.primal = m_ > 0 ? inf_norm(scaled_.E_inv.cwiseProduct(Ax - z)) : 0.0;
    const VectorXd Hx = scaled_.H * x;
    const VectorXd Aty = m_ > 0 ? VectorXd(scaled_.A.transpose() * y) : VectorXd::Zero(n_);
    r.dual = scaled_.c_inv * inf_norm(scaled_.D_inv.cwiseProduct(Hx + scaled_.g + Aty));
    const double prim_scale =
        m_ > 0 ? std::max(inf_norm(scaled_.E_inv.cwiseProduct(Ax)), inf_norm(scaled_.E_inv.cwiseProduct(z))) : 0.0;
    const double dual_scale = scaled_.c_inv * std::max({inf_norm(scaled_.D_inv.cwiseProduct(Hx)),
                                                        inf_norm(scaled_.D_inv.cwiseProduct(Aty)),
                                                        inf_norm(scaled_.D_inv.cwiseProduct(scaled_.g))});
    r.eps_primal = settings_.eps_abs + settings_.eps_rel * prim_scale;
    r.eps_dual = settings_.eps_abs + settings_.eps_rel * dual_scale;
    return r;
  }

  bool primal_infeasible(const VectorXd& dy_scaled) const {
    if (m_ == 0) return false;
    // Certificate in original units: dy = E dy_s / c.
    const VectorXd dy = scaled_.c_inv * scaled_.E.cwiseProduct(dy_scaled);
    const double norm_dy = inf_norm(dy);
    if (norm_dy < kDivisionTol) return false;
    const double eps = settings_.eps_primal_infeasible * norm_dy;
    const VectorXd Atdy = scaled_.c_inv * scaled_.D_inv.cwiseProduct(scaled_.A.transpose() * dy_scaled);
    if (inf_norm(Atdy) > eps) return false;
    double support = 0.0;
    for (Index i = 0; i < m_; ++i) {
      if (dy[i] > 0.0) {
        if (std::isinf(problem_.u[i])) return false;
        support += problem_.u[i] * dy[i];
      } else if (dy[i] < 0.0) {
        if (std::isinf(problem_.l[i])) return false;
        support += problem_.l[i] * dy[i];
      }
    }
    return support < -eps;
  }

  bool dual_infeasible(const VectorXd& dx_scaled) const {
    const VectorXd dx = scaled_.D.cwiseProduct(dx_scaled);
    const double norm_dx = inf_norm(dx);
    if (norm_dx < kDivisionTol) return false;
    const double eps = settings_.eps_dual_infeasible * norm_dx;
    const VectorXd Hdx = scaled_.c_inv * scaled_.D_inv.cwiseProduct(scaled_.H * dx_scaled);
    if (inf_norm(Hdx) > eps) return false;
    if (problem_.g.dot(dx) >= -eps) return false;
    if (m_ > 0) {
      const VectorXd Adx = scaled_.E_inv.cwiseProduct(scaled_.A * dx_scaled);
      for (Index i = 0; i < m_; ++i) {
        const bool lo_inf = std::isinf(problem_.l[i]);
        const bool hi_inf = std::isinf(problem_.u[i]);
        if (!hi_inf && Adx[i] > eps) return false;
        if (!lo_inf && Adx[i] < -eps) return false;
      }
    }
    return true;
  }

  void adapt_rho() {
    if (m_ == 0) return;
    const VectorXd Ax = scaled_.A * x_;
    const VectorXd Hx = scaled_.H * x_;
    const VectorXd Aty = scaled_.A.transpose() * y_;
    const double prim = inf_norm(Ax - z_);
    const double dual = inf_norm(Hx + scaled_.g + Aty);
    const double prim_norm = std::max(inf_norm(Ax), inf_norm(z_));
    const double dual_norm = std::max({inf_norm(Hx), inf_norm(Aty), inf_norm(scaled_.g)});
    const double prim_ratio = prim / (prim_norm + kDivisionTol);
    const double dual_ratio = dual / (dual_norm + kDivisionTol);
    double rho_new = rho_ * std::sqrt(prim_ratio / (dual_ratio + kDivisionTol));
    rho_new = std::clamp(rho_new, kRhoMin, kRhoMax);
    if (rho_new > rho_ * settings_.adaptive_rho_tolerance || rho_new < rho_ / settings_.adaptive_rho_tolerance) {
      rho_ = rho_new;
      update_rho_vector();
      factorize();
    }
  }

  QpSolution finish_certificate(QpSolution out, const Residuals& res) {
    out.z = scaled_.D.cwiseProduct(x_);
    out.y = scaled_.c_inv * scaled_.E.cwiseProduct(y_);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.objective = problem_.objective(out.z);
    return out;
  }

  QpSolution finish(QpSolution out, const VectorXd& x, const VectorXd& y, const Residuals& res) {
    out.z = scaled_.D.cwiseProduct(x);
    out.y = scaled_.c_inv * scaled_.E.cwiseProduct(y);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    if (settings_.polish && out.status == QpStatus::Solved) polish(out, x, y, res);
    out.objective = problem_.objective(out.z);
    return out;
  }

  // Guess the active set from the ADMM iterate, solve the equality-constrained
  // KKT system on it and keep the result only if it is at least as accurate
  // and dual-feasible.
  void polish(QpSolution& out, const VectorXd& x, const VectorXd& y, const Residuals& admm) {
    const VectorXd z = scaled_.A * x;
    std::vector<Index> active;
    std::vector<double> bound;
    std::vector<int> side;  // -1 lower, +1 upper, 0 equality
    for (Index i = 0; i < m_; ++i) {
      const double lo = scaled_.l[i];
      const double hi = scaled_.u[i];
      if (is_equality(lo, hi)) {
        active.push_back(i);
        bound.push_back(lo);
        side.push_back(0);
      } else if (z[i] - lo < -y[i]) {
        active.push_back(i);
        bound.push_back(lo);
        side.push_back(-1);
      } else if (hi - z[i] < y[i]) {
        active.push_back(i);
        bound.push_back(hi);
        side.push_back(1);
      }
    }
    const Index k = static_cast<Index>(active.size());
    const Index dim = n_ + k;

    std::vector<Eigen::Triplet<double>> trips;
    for (Index j = 0; j < scaled_.H.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(scaled_.H, j); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    }
    // Row selection of A for the active set.
    std::vector<Index> row_to_active(static_cast<std::size_t>(m_), -1);
    for (Index a = 0; a < k; ++a) row_to_active[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] = a;
    for (Index j = 0; j < scaled_.A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(scaled_.A, j); it; ++it) {
        const Index a = row_to_active[static_cast<std::size_t>(it.row())];
        if (a < 0) continue;
        trips.emplace_back(n_ + a, j, it.value());
        trips.emplace_back(j, n_ + a, it.value());
      }
    }
    SparseMatrix exact(dim, dim);
    exact.setFromTriplets(trips.begin(), trips.end());
    SparseMatrix perturbed = exact;
    for (Index i = 0; i < dim; ++i) {
      perturbed.coeffRef(i, i) += i < n_ ? settings_.polish_delta : -settings_.polish_delta;
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(perturbed);
    if (ldlt.info() != Eigen::Success) return;

    VectorXd rhs(dim);
    rhs.head(n_) = -scaled_.g;
    for (Index a = 0; a < k; ++a) rhs[n_ + a] = bound[static_cast<std::size_t>(a)];
    VectorXd sol = ldlt.solve(rhs);
    for (int r = 0; r < settings_.polish_refine_iter; ++r) {
      const VectorXd err = rhs - exact * sol;
      sol += ldlt.solve(err);
    }
    if (!sol.allFinite()) return;

    const VectorXd x_pol = sol.head(n_);
    VectorXd y_pol = VectorXd::Zero(m_);
    const double sign_tol = 1e-9 * std::max(1.0, inf_norm(sol.tail(k)));
    for (Index a = 0; a < k; ++a) {
      const double mult = sol[n_ + a];
      const int s = side[static_cast<std::size_t>(a)];
      if ((s < 0 && mult > sign_tol) || (s > 0 && mult < -sign_tol)) return;
      y_pol[active[static_cast<std::size_t>(a)]] = mult;
    }
    const VectorXd z_pol = project(scaled_.A * x_pol, scaled_.l, scaled_.u);
    const Residuals res = residuals(x_pol, z_pol, y_pol);
    const bool within = res.primal <= res.eps_primal && res.dual <= res.eps_dual;
    const bool better = res.primal <= admm.primal && res.dual <= admm.dual;
    if (!within && !better) return;
    out.z = scaled_.D.cwiseProduct(x_pol);
    out.y = scaled_.c_inv * scaled_.E.cwiseProduct(y_pol);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.polished = true;
  }

  const QpProblem& problem_;
  const QpSettings& settings_;
  ScaledProblem scaled_;
  Index n_ = 0;
  Index m_ = 0;
  VectorXd x_;
  VectorXd z_;
  VectorXd y_;
  double rho_ = 0.1;
  VectorXd rho_vec_;
  Eigen::SimplicialLDLT<SparseMatrix> kkt_;
};

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(H * z) + g.dot(z); }

void QpProblem::validate() const {
  const Index n = g.size();
  const Index m = l.size();
  if (H.rows() != n || H.cols() != n) throw InvalidArgument("qp: H must be n x n");
  if (A.rows() != m || A.cols() != n) throw InvalidArgument("qp: A must be m x n");
  if (u.size() != m) throw InvalidArgument("qp: l and u must have the same length");
  if (!g.allFinite()) throw InvalidArgument("qp: g must be finite");
  for (Index i = 0; i < m; ++i) {
    if (std::isnan(l[i]) || std::isnan(u[i])) throw InvalidArgument("qp: NaN bound");
    if (l[i] > u[i]) throw InvalidArgument("qp: l > u at row " + std::to_string(i));
  }
  const SparseMatrix diff = H - SparseMatrix(H.transpose());
  double asym = 0.0;
  double scale = 1.0;
  for (Index j = 0; j < diff.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it) asym = std::max(asym, std::abs(it.value()));
  }
  for (Index j = 0; j < H.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(H, j); it; ++it) {
      if (!std::isfinite(it.value())) throw InvalidArgument("qp: H must be finite");
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  if (asym > 1e-10 * scale) throw InvalidArgument("qp: H must be symmetric");
  for (Index j = 0; j < A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
      if (!std::isfinite(it.value())) throw InvalidArgument("qp: A must be finite");
    }
  }
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIterations: return "max_iter";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

QpStatus parse_qp_status(std::string_view text) {
  if (text == "solved") return QpStatus::Solved;
  if (text == "max_iter") return QpStatus::MaxIterations;
  if (text == "primal_infeasible") return QpStatus::PrimalInfeasible;
  if (text == "dual_infeasible") return QpStatus::DualInfeasible;
  throw InvalidArgument("unknown QP status '" + std::string(text) + "'");
}

WarmStart warm_start(const QpSolution& previous) { return {previous.z, previous.y}; }

QpSolution solve(const QpProblem& problem, const QpSettings& settings, const std::optional<WarmStart>& start) {
  problem.validate();
  if (start && (start->z.size() != problem.num_variables() || start->y.size() != problem.num_constraints())) {
    throw InvalidArgument("qp: warm start dimensions do not match the problem");
  }
  AdmmSolver solver(problem, settings);
  if (start) solver.warm(*start);
  return solver.run();
}

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  KktResiduals r;
  const VectorXd Az = problem.A * z;
  if (problem.num_constraints() > 0) {
    r.primal = inf_norm(Az - project(Az, problem.l, problem.u));
  }
  VectorXd stat = problem.H * z + problem.g;
  if (problem.num_constraints() > 0) stat += problem.A.transpose() * y;
  r.dual = inf_norm(stat);
  for (Index i = 0; i < problem.num_constraints(); ++i) {
    double gap = 0.0;
    if (y[i] > 0.0) {
      // A multiplier against an absent bound counts at its own size.
      gap = std::isinf(problem.u[i]) ? y[i] : y[i] * std::abs(problem.u[i] - Az[i]);
    } else if (y[i] < 0.0) {
      gap = std::isinf(problem.l[i]) ? -y[i] : -y[i] * std::abs(Az[i] - problem.l[i]);
    }
    r.complementarity = std::max(r.complementarity, gap);
  }
  return r;
}

SparseMatrix sparse_from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
  SparseMatrix out = dense.sparseView(1.0, drop_tol);
  out.makeCompressed();
  return out;
}

}  // namespace srmpc
