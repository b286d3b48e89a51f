// Copyright 2026 The DFL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DFL_KKT_HPP_
#define DFL_KKT_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

#include "dfl/errors.hpp"

namespace dfl {

/// Linearized optimality system at a primal-dual point of
///   max  F(x)  s.t.  C x <= d,  E x = e
/// with stationarity  grad F(x) = C^T mu + E^T nu  and  mu >= 0.
///
/// Differentiating the conditions with respect to a parameter p gives
///
///   [ Q            C^T        E^T ] [dx ]   [ d gradF / dp ]
///   [ diag(mu) C   diag(Cx-d)  0  ] [dmu] = [      0       ]
///   [ E            0           0  ] [dnu]   [      0       ]
///
/// where Q is the curvature block supplied by the caller.
struct KktSystem {
  Eigen::MatrixXd curvature;       // n x n
  Eigen::MatrixXd ineq;            // m x n, C
  Eigen::VectorXd ineq_duals;      // m, mu
  Eigen::VectorXd ineq_residual;   // m, C x - d (<= 0 when feasible)
  Eigen::MatrixXd eq;              // p x n, E (rows independent)
};

struct KktSolveStats {
  bool damped = false;
  std::size_t ties = 0;  // constraints with mu == 0 and Cx - d == 0
};

namespace detail {

// Iterated Tikhonov: each pass shrinks the damping bias by roughly
// damping / (sigma^2 + damping) on consistent systems.
inline constexpr int kRefinementSteps = 4;

inline Eigen::MatrixXd assemble_kkt(const KktSystem& sys, double tie_tol,
                                    std::size_t* ties) {
  const Eigen::Index n = sys.curvature.rows();
  const Eigen::Index m = sys.ineq.rows();
  const Eigen::Index p = sys.eq.rows();
  if (sys.curvature.cols() != n || sys.ineq.cols() != n ||
      sys.eq.cols() != n || sys.ineq_duals.size() != m ||
      sys.ineq_residual.size() != m) {
    throw ShapeMismatch("KKT system blocks have inconsistent shapes");
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m + p, n + m + p);
  k.topLeftCorner(n, n) = sys.curvature;
  k.block(0, n, n, m) = sys.ineq.transpose();
  k.block(0, n + m, n, p) = sys.eq.transpose();
  k.block(n + m, 0, p, n) = sys.eq;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = sys.ineq_duals(i);
    const double r = sys.ineq_residual(i);
    if (std::abs(mu) <= tie_tol && std::abs(r) <= tie_tol) {
      // Degenerate complementarity: treat as inactive, dmu_i = 0.
      k(n + i, n + i) = 1.0;
      if (ties != nullptr) ++*ties;
      continue;
    }
    // Complementarity rows are rescaled to unit max-entry. Only the mu
    // block of the adjoint changes under this scaling.
    Eigen::RowVectorXd row = mu * sys.ineq.row(i);
    const double scale = std::max(row.cwiseAbs().maxCoeff(), std::abs(r));
    k.block(n + i, 0, 1, n) = row / scale;
    k(n + i, n + i) = r / scale;
  }
  return k;
}

}  // namespace detail

/// Solves K^T z = [upstream; 0; 0] and returns the x-block of z, so that
/// upstream^T dx/dp = z_x^T (d gradF / dp) for any parameter p.
///
/// Partial-pivot LU first; if the matrix is numerically singular the
/// Tikhonov-regularized least-squares solution (K K^T + damping I) z = K r
/// is used instead, followed by a few refinement passes, and stats->damped
/// is set.
inline Eigen::VectorXd solve_kkt_adjoint(const KktSystem& sys,
                                         const Eigen::VectorXd& upstream,
                                         KktSolveStats* stats = nullptr,
                                         double tie_tol = 1e-12,
                                         double damping = 1e-8) {
  const Eigen::Index n = sys.curvature.rows();
  if (upstream.size() != n) {
    throw ShapeMismatch("upstream gradient length does not match x");
  }
  KktSolveStats local;
  const Eigen::MatrixXd k = detail::assemble_kkt(sys, tie_tol, &local.ties);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k.rows());
  rhs.head(n) = upstream;
  if (upstream.isZero(0.0)) {
    if (stats != nullptr) *stats = local;
    return Eigen::VectorXd::Zero(n);
  }

  const Eigen::MatrixXd kt = k.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kt);
  Eigen::VectorXd z;
  bool ok = lu.rcond() > 1e-13;
  if (ok) {
    z = lu.solve(rhs);
    ok = z.allFinite();
  }
  if (!ok) {
    local.damped = true;
    Eigen::MatrixXd normal = k * k.transpose();
    normal.diagonal().array() += damping;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    z = ldlt.solve(k * rhs);
    for (int it = 0; it < detail::kRefinementSteps; ++it) z += ldlt.solve(k * (rhs - kt * z));
    if (!z.allFinite()) {
      throw SingularSystem("KKT system is singular even after damping");
    }
  }
  if (stats != nullptr) *stats = local;
  return z.head(n);
}

/// Forward sensitivity dx/dp for a dense right-hand side (n x P). Used by
/// tests and small problems; training uses solve_kkt_adjoint.
inline Eigen::MatrixXd solve_kkt_forward(const KktSystem& sys,
                                         const Eigen::MatrixXd& dgrad_dp,
                                         KktSolveStats* stats = nullptr,
                                         double tie_tol = 1e-12,
                                         double damping = 1e-8) {
  const Eigen::Index n = sys.curvature.rows();
  if (dgrad_dp.rows() != n) {
    throw ShapeMismatch("parameter Jacobian row count does not match x");
  }
  KktSolveStats local;
  const Eigen::MatrixXd k = detail::assemble_kkt(sys, tie_tol, &local.ties);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k.rows(), dgrad_dp.cols());
  rhs.topRows(n) = dgrad_dp;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  Eigen::MatrixXd sol;
  bool ok = lu.rcond() > 1e-13;
  if (ok) {
    sol = lu.solve(rhs);
    ok = sol.allFinite();
  }
  if (!ok) {
    local.damped = true;
    Eigen::MatrixXd normal = k.transpose() * k;
    normal.diagonal().array() += damping;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    sol = ldlt.solve(k.transpose() * rhs);
    for (int it = 0; it < detail::kRefinementSteps; ++it) sol += ldlt.solve(k.transpose() * (rhs - k * sol));
    if (!sol.allFinite()) {
      throw SingularSystem("KKT system is singular even after damping");
    }
  }
  if (stats != nullptr) *stats = local;
  return sol.topRows(n);
}

}  // namespace dfl

#endif  // DFL_KKT_HPP_
