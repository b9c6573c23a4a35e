#pragma once

// Reference solver for small dense QPs: enumerate every assignment
// of constraint rows to {inactive, at lower bound, at upper bound}, solve the
// equality-constrained KKT system for each and keep the feasible candidate
// with the lowest objective. For a strictly convex QP the optimum is the
// stationary point of its own active set, so the minimum over feasible
// candidates is the global optimum.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "srmpc/qp.hpp"

namespace srmpc::oracle {

struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  QpProblem to_problem() const {
    QpProblem p;
    p.H = sparse_from_dense(H);
    p.g = g;
    p.A = sparse_from_dense(A);
    p.l = l;
    p.u = u;
    return p;
  }
};

inline std::optional<Eigen::VectorXd> enumerate_active_sets(const DenseQp& qp, double feas_tol = 1e-9) {
  const auto n = qp.g.size();
  const auto m = qp.l.size();
  double best_obj = std::numeric_limits<double>::infinity();
  std::optional<Eigen::VectorXd> best;
  long combos = 1;
  for (Eigen::Index i = 0; i < m; ++i) combos *= 3;
  for (long code = 0; code < combos; ++code) {
    std::vector<Eigen::Index> rows;
    std::vector<double> rhs;
    long c = code;
    bool skip = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int state = static_cast<int>(c % 3);
      c /= 3;
      if (state == 1) {
        if (!std::isfinite(qp.l[i])) skip = true;
        rows.push_back(i);
        rhs.push_back(qp.l[i]);
      } else if (state == 2) {
        if (!std::isfinite(qp.u[i]) || qp.u[i] == qp.l[i]) skip = true;
        rows.push_back(i);
        rhs.push_back(qp.u[i]);
      }
    }
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (skip || k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd b(n + k);
    K.topLeftCorner(n, n) = qp.H;
    b.head(n) = -qp.g;
    for (Eigen::Index a = 0; a < k; ++a) {
      K.block(n + a, 0, 1, n) = qp.A.row(rows[static_cast<std::size_t>(a)]);
      K.block(0, n + a, n, 1) = qp.A.row(rows[static_cast<std::size_t>(a)]).transpose();
      b[n + a] = rhs[static_cast<std::size_t>(a)];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(b);
    const Eigen::VectorXd z = sol.head(n);
    const Eigen::VectorXd Az = qp.A * z;
    bool feasible = true;
    for (Eigen::Index i = 0; i < m && feasible; ++i) {
      feasible = Az[i] >= qp.l[i] - feas_tol && Az[i] <= qp.u[i] + feas_tol;
    }
    if (!feasible) continue;
    const double obj = 0.5 * z.dot(qp.H * z) + qp.g.dot(z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  return best;
}

// Random strictly convex QP with n <= max_n variables and m <= max_m rows,
// feasible by construction around a random point.
inline DenseQp random_qp(std::mt19937_64& rng, int max_n = 6, int max_m = 8) {
  std::uniform_int_distribution<int> n_dist(1, max_n);
  std::uniform_int_distribution<int> m_dist(0, max_m);
  std::uniform_int_distribution<int> kind_dist(0, 9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = n_dist(rng);
  const int m = m_dist(rng);
  constexpr double inf = std::numeric_limits<double>::infinity();

  DenseQp qp;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = normal(rng);
  qp.H = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.g.resize(n);
  for (int i = 0; i < n; ++i) qp.g[i] = 5.0 * normal(rng);
  qp.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) qp.A(i, j) = unit(rng) < 0.3 ? 0.0 : normal(rng);
  Eigen::VectorXd z0(n);
  for (int j = 0; j < n; ++j) z0[j] = normal(rng);
  const Eigen::VectorXd Az0 = qp.A * z0;
  qp.l.resize(m);
  qp.u.resize(m);
  int equalities = 0;
  for (int i = 0; i < m; ++i) {
    const int kind = kind_dist(rng);
    const double lo = Az0[i] - unit(rng);
    const double hi = Az0[i] + unit(rng);
    if (kind == 0 && equalities < n - 1) {
      qp.l[i] = qp.u[i] = Az0[i];
      ++equalities;
    } else if (kind <= 2) {
      qp.l[i] = lo;
      qp.u[i] = inf;
    } else if (kind <= 4) {
      qp.l[i] = -inf;
      qp.u[i] = hi;
    } else {
      qp.l[i] = lo;
      qp.u[i] = hi;
    }
  }
  return qp;
}

}  // namespace srmpc::oracle
