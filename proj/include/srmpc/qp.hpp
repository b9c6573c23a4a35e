#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <string_view>

namespace srmpc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// min 1/2 z'Hz + g'z  s.t.  l <= Az <= u
//
// H is stored in full (both triangles). Infinite bounds are +-infinity.
struct QpProblem {
  SparseMatrix H;
  Eigen::VectorXd g;
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_variables() const { return g.size(); }
  Eigen::Index num_constraints() const { return l.size(); }
  double objective(const Eigen::VectorXd& z) const;
  // Throws InvalidArgument on inconsistent dimensions, asymmetric H or l > u.
  void validate() const;
};

enum class QpStatus { Solved, MaxIterations, PrimalInfeasible, DualInfeasible };

std::string_view to_string(QpStatus status);
QpStatus parse_qp_status(std::string_view text);

struct QpSolution {
  Eigen::VectorXd z;  // primal
  Eigen::VectorXd y;  // dual, y_i > 0 at an active upper bound, < 0 at a lower
  QpStatus status = QpStatus::MaxIterations;
  double primal_residual = 0.0;  // ||Az - proj(Az)||_inf
  double dual_residual = 0.0;    // ||Hz + g + A'y||_inf
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-4;
  double eps_rel = 0.0;
  double eps_primal_infeasible = 1e-5;
  double eps_dual_infeasible = 1e-5;
  int max_iter = 4000;
  int scaling_iterations = 10;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  double adaptive_rho_tolerance = 5.0;
  bool polish = true;
  double polish_delta = 1e-8;
  int polish_refine_iter = 3;
};

struct WarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd y;
};

// Starting iterate taken from a previous solution.
WarmStart warm_start(const QpSolution& previous);

// ADMM operator splitting with Ruiz equilibration, adaptive penalty,
// infeasibility certificates and active-set polishing. Throws
// InvalidArgument on a malformed problem or a warm start of the wrong size.
QpSolution solve(const QpProblem& problem, const QpSettings& settings = {},
                 const std::optional<WarmStart>& start = std::nullopt);

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
};

// Optimality residuals of a primal/dual pair against the original problem.
KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& z, const Eigen::VectorXd& y);

// Convenience builders.
SparseMatrix sparse_from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

}  // namespace srmpc
