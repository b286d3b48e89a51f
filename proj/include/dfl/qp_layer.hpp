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

#ifndef DFL_QP_LAYER_HPP_
#define DFL_QP_LAYER_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/kkt.hpp"
#include "dfl/lp.hpp"
#include "dfl/matching.hpp"

namespace dfl {

/// Regularized linear program
///   max theta^T x - gamma ||x||^2   s.t.  A x = b,  G x <= h.
struct QpProblem {
  Eigen::VectorXd theta;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  double gamma = 0.1;

  Eigen::Index size() const { return theta.size(); }

  void validate() const {
    const Eigen::Index n = theta.size();
    if (A.cols() != n && A.rows() != 0) throw ShapeMismatch("A has wrong column count");
    if (G.cols() != n && G.rows() != 0) throw ShapeMismatch("G has wrong column count");
    if (b.size() != A.rows()) throw ShapeMismatch("b length differs from rows of A");
    if (h.size() != G.rows()) throw ShapeMismatch("h length differs from rows of G");
    if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
  }
};

/// Primal-dual point. lambda >= 0 multiplies G x <= h, nu multiplies A x = b,
/// with stationarity theta - 2 gamma x - G^T lambda - A^T nu = 0.
struct LayerSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd nu;
  double objective = 0.0;
  int iterations = 0;
};

struct QpSolverOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
  // Re-solve the equality-constrained problem on the identified active set.
  bool polish = true;
};

struct RowReduction {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Eigen::Index> kept;
};

/// Drops equality rows that are linear combinations of earlier rows. The
/// feasible set is unchanged; inconsistent dependent rows raise
/// InfeasibleRows.
inline RowReduction reduce_rows(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                double tol = 1e-9) {
  if (b.size() != a.rows()) throw ShapeMismatch("b length differs from rows of A");
  RowReduction out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Eigen::VectorXd row = a.row(i).transpose();
    const double scale = std::max(1.0, row.lpNorm<Eigen::Infinity>());
    bool dependent = false;
    double implied_rhs = 0.0;
    if (out.kept.empty()) {
      dependent = row.lpNorm<Eigen::Infinity>() <= tol;
    } else {
      Eigen::MatrixXd basis(a.cols(), static_cast<Eigen::Index>(out.kept.size()));
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(out.kept.size()));
      for (std::size_t j = 0; j < out.kept.size(); ++j) {
        basis.col(static_cast<Eigen::Index>(j)) = a.row(out.kept[j]).transpose();
        rhs(static_cast<Eigen::Index>(j)) = b(out.kept[j]);
      }
      const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(row);
      dependent = (basis * coef - row).lpNorm<Eigen::Infinity>() <= tol * scale;
      implied_rhs = coef.dot(rhs);
    }
    if (dependent) {
      if (std::abs(b(i) - implied_rhs) > tol * std::max(1.0, std::abs(b(i)))) {
        throw InfeasibleRows("equality row " + std::to_string(i) +
                             " is dependent on earlier rows with an inconsistent right-hand side");
      }
      continue;
    }
    out.kept.push_back(i);
  }
  out.A.resize(static_cast<Eigen::Index>(out.kept.size()), a.cols());
  out.b.resize(static_cast<Eigen::Index>(out.kept.size()));
  for (std::size_t j = 0; j < out.kept.size(); ++j) {
    out.A.row(static_cast<Eigen::Index>(j)) = a.row(out.kept[j]);
    out.b(static_cast<Eigen::Index>(j)) = b(out.kept[j]);
  }
  return out;
}

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;     // max positive part of G x - h
  double dual_sign = 0.0;       // max negative part of lambda
  double complementarity = 0.0; // max |lambda_i (G x - h)_i|

  double max() const {
    return std::max({stationarity, primal_eq, primal_ineq, dual_sign, complementarity});
  }
};

inline KktResiduals kkt_residuals(const QpProblem& prob, const LayerSolution& sol) {
  KktResiduals r;
  Eigen::VectorXd stat = prob.theta - 2.0 * prob.gamma * sol.x;
  if (prob.G.rows() > 0) stat -= prob.G.transpose() * sol.lambda;
  if (prob.A.rows() > 0) stat -= prob.A.transpose() * sol.nu;
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  if (prob.A.rows() > 0) r.primal_eq = (prob.A * sol.x - prob.b).lpNorm<Eigen::Infinity>();
  if (prob.G.rows() > 0) {
    const Eigen::VectorXd slack = prob.G * sol.x - prob.h;
    r.primal_ineq = std::max(0.0, slack.maxCoeff());
    r.dual_sign = std::max(0.0, -sol.lambda.minCoeff());
    r.complementarity = sol.lambda.cwiseProduct(slack).lpNorm<Eigen::Infinity>();
  }
  return r;
}

namespace detail {

inline double qp_objective(const QpProblem& prob, const Eigen::VectorXd& x) {
  return prob.theta.dot(x) - prob.gamma * x.squaredNorm();
}

// Equality-constrained solve on an active set seeded from the interior
// point, refined by adding violated rows and dropping rows with negative
// multipliers. Returns false when no consistent KKT point is found.
inline bool polish_active_set(const QpProblem& prob, const RowReduction& eq,
                              const Eigen::VectorXd& slack, LayerSolution& sol) {
  const Eigen::Index n = prob.size();
  const Eigen::Index m = prob.G.rows();
  const Eigen::Index p = eq.A.rows();
  std::vector<char> in_set(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) in_set[i] = sol.lambda(i) > slack(i);

  const double feas_tol = 1e-10 * (1.0 + prob.h.lpNorm<Eigen::Infinity>());
  for (int round = 0; round < 2 * static_cast<int>(m) + 2; ++round) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_set[i]) active.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(active.size());
    const Eigen::Index dim = n + na + p;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    k.topLeftCorner(n, n).diagonal().setConstant(2.0 * prob.gamma);
    rhs.head(n) = prob.theta;
    for (Eigen::Index j = 0; j < na; ++j) {
      k.block(0, n + j, n, 1) = prob.G.row(active[j]).transpose();
      k.block(n + j, 0, 1, n) = prob.G.row(active[j]);
      rhs(n + j) = prob.h(active[j]);
    }
    if (p > 0) {
      k.block(0, n + na, n, p) = eq.A.transpose();
      k.block(n + na, 0, p, n) = eq.A;
      rhs.tail(p) = eq.b;
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(k);
    const Eigen::VectorXd z = cod.solve(rhs);
    if (!z.allFinite() ||
        (k * z - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      return false;
    }
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd lam_active = z.segment(n, na);

    Eigen::Index worst_violation = -1;
    double violation = feas_tol;
    if (m > 0) {
      const Eigen::VectorXd r = prob.G * x - prob.h;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!in_set[i] && r(i) > violation) {
          violation = r(i);
          worst_violation = i;
        }
      }
    }
    Eigen::Index most_negative = -1;
    double negative = -1e-9;
    for (Eigen::Index j = 0; j < na; ++j) {
      if (lam_active(j) < negative) {
        negative = lam_active(j);
        most_negative = active[j];
      }
    }
    if (worst_violation >= 0) {
      in_set[worst_violation] = 1;
      continue;
    }
    if (most_negative >= 0) {
      // A dependent active set can have sign-infeasible minimum-norm
      // multipliers at the right x; keep the interior-point ones then.
      if ((x - sol.x).lpNorm<Eigen::Infinity>() <= 1e-7) {
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
        for (Eigen::Index j = 0; j < na; ++j) lambda(active[j]) = sol.lambda(active[j]);
        sol.x = x;
        sol.lambda = lambda;
        return true;
      }
      in_set[most_negative] = 0;
      continue;
    }
    // Feasible x with sign-feasible multipliers satisfies the KKT
    // conditions and is therefore the unique maximizer.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < na; ++j) lambda(active[j]) = std::max(0.0, lam_active(j));
    sol.x = x;
    sol.lambda = lambda;
    sol.nu = p > 0 ? Eigen::VectorXd(z.tail(p)) : Eigen::VectorXd();
    return true;
  }
  return false;
}

}  // namespace detail

/// Solves the strongly concave QP with a Mehrotra predictor-corrector
/// primal-dual interior-point method. Dependent equality rows are removed
/// with reduce_rows first; their multipliers are reported as zero.
inline LayerSolution solve_qp(const QpProblem& prob, const QpSolverOptions& opts = {}) {
  prob.validate();
  if (!(prob.gamma > 0.0)) throw DomainError("solve_qp requires gamma > 0");
  const Eigen::Index n = prob.size();
  const Eigen::Index m = prob.G.rows();
  const RowReduction eq = reduce_rows(prob.A, prob.b);
  const Eigen::Index p = eq.A.rows();
  const double q = 2.0 * prob.gamma;

  auto solve_reduced = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& r1,
                           const Eigen::VectorXd& r2) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + p, n + p);
    k.topLeftCorner(n, n).diagonal().setConstant(q);
    if (m > 0) k.topLeftCorner(n, n) += prob.G.transpose() * w.asDiagonal() * prob.G;
    if (p > 0) {
      k.topRightCorner(n, p) = eq.A.transpose();
      k.bottomLeftCorner(p, n) = eq.A;
    }
    Eigen::VectorXd rhs(n + p);
    rhs << r1, r2;
    return Eigen::VectorXd(k.partialPivLu().solve(rhs));
  };

  LayerSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd nu_red = Eigen::VectorXd::Zero(p);

  if (m == 0) {
    const Eigen::VectorXd z = solve_reduced(Eigen::VectorXd(), prob.theta, eq.b);
    sol.x = z.head(n);
    nu_red = z.tail(p);
  } else {
    // Starting point from the problem with all inequalities as soft
    // quadratic penalties, then shifted into the positive orthant.
    Eigen::VectorXd x =
        solve_reduced(Eigen::VectorXd::Ones(m), prob.theta + prob.G.transpose() * prob.h, eq.b).head(n);
    Eigen::VectorXd s = (prob.h - prob.G * x).cwiseMax(1.0);
    Eigen::VectorXd lam = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(p);

    const double scale_d = 1.0 + prob.theta.lpNorm<Eigen::Infinity>();
    const double scale_p = 1.0 + (p > 0 ? eq.b.lpNorm<Eigen::Infinity>() : 0.0);
    const double scale_g = 1.0 + prob.h.lpNorm<Eigen::Infinity>();

    auto max_step = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
      }
      return alpha;
    };

    bool converged = false;
    double residual = 0.0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      Eigen::VectorXd rd = q * x - prob.theta + prob.G.transpose() * lam;
      if (p > 0) rd += eq.A.transpose() * nu;
      const Eigen::VectorXd rp = p > 0 ? Eigen::VectorXd(eq.A * x - eq.b) : Eigen::VectorXd();
      const Eigen::VectorXd rg = prob.G * x + s - prob.h;
      const double mu = s.dot(lam) / static_cast<double>(m);
      const double res_d = rd.lpNorm<Eigen::Infinity>() / scale_d;
      const double res_p = (p > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0) / scale_p;
      const double res_g = rg.lpNorm<Eigen::Infinity>() / scale_g;
      residual = std::max({res_d, res_p, res_g, mu});
      if (residual <= opts.tolerance) {
        converged = true;
        break;
      }
      if (lam.lpNorm<Eigen::Infinity>() > 1e13) break;

      const Eigen::VectorXd w = lam.cwiseQuotient(s);
      // Newton direction for complementarity target rc = s.*lam - sigma mu.
      auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                           Eigen::VectorXd& dlam, Eigen::VectorXd& dnu) {
        const Eigen::VectorXd t = (lam.cwiseProduct(rg) - rc).cwiseQuotient(s);
        const Eigen::VectorXd r1 = -rd - prob.G.transpose() * t;
        const Eigen::VectorXd r2 = p > 0 ? Eigen::VectorXd(-rp) : Eigen::VectorXd();
        const Eigen::VectorXd z = solve_reduced(w, r1, r2);
        dx = z.head(n);
        dnu = z.tail(p);
        dlam = w.cwiseProduct(prob.G * dx) + t;
        ds = -rg - prob.G * dx;
      };

      Eigen::VectorXd dx, ds, dlam, dnu;
      direction(s.cwiseProduct(lam), dx, ds, dlam, dnu);
      const double a_aff = std::min(max_step(s, ds), max_step(lam, dlam));
      const double mu_aff = (s + a_aff * ds).dot(lam + a_aff * dlam) / static_cast<double>(m);
      const double sigma = std::pow(mu_aff / mu, 3.0);
      const Eigen::VectorXd rc =
          s.cwiseProduct(lam) + ds.cwiseProduct(dlam) - Eigen::VectorXd::Constant(m, sigma * mu);
      direction(rc, dx, ds, dlam, dnu);
      const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dlam)));
      x += alpha * dx;
      s += alpha * ds;
      lam += alpha * dlam;
      nu += alpha * dnu;
    }
    sol.iterations = it;
    if (!converged) {
      const double primal = std::max((prob.G * x + s - prob.h).lpNorm<Eigen::Infinity>(),
                                     p > 0 ? (eq.A * x - eq.b).lpNorm<Eigen::Infinity>() : 0.0);
      if (primal > 1e-6 && lam.lpNorm<Eigen::Infinity>() > 1e6) {
        throw Infeasible("QP feasible region is empty (dual iterates diverge)");
      }
      throw NoConvergence("interior-point iteration cap reached", residual);
    }
    sol.x = x;
    sol.lambda = lam;
    nu_red = nu;
    if (opts.polish) {
      sol.nu = nu_red;
      if (detail::polish_active_set(prob, eq, s, sol)) nu_red = sol.nu;
    }
  }

  sol.nu = Eigen::VectorXd::Zero(prob.A.rows());
  for (std::size_t j = 0; j < eq.kept.size(); ++j) sol.nu(eq.kept[j]) = nu_red(static_cast<Eigen::Index>(j));
  sol.objective = detail::qp_objective(prob, sol.x);
  return sol;
}

namespace detail {

inline KktSystem qp_kkt_system(const QpProblem& prob, const LayerSolution& sol) {
  const Eigen::Index n = prob.size();
  KktSystem sys;
  sys.curvature = 2.0 * prob.gamma * Eigen::MatrixXd::Identity(n, n);
  sys.ineq = prob.G.rows() > 0 ? prob.G : Eigen::MatrixXd(0, n);
  sys.ineq_duals = sol.lambda;
  sys.ineq_residual = prob.G.rows() > 0 ? Eigen::VectorXd(prob.G * sol.x - prob.h) : Eigen::VectorXd();
  const RowReduction eq = reduce_rows(prob.A.rows() > 0 ? prob.A : Eigen::MatrixXd(0, n), prob.b);
  sys.eq = eq.A.rows() > 0 ? eq.A : Eigen::MatrixXd(0, n);
  return sys;
}

}  // namespace detail

/// Gradient of a downstream loss with respect to theta, given
/// upstream = dLoss/dx at the solution. Since grad_x theta^T x = theta, the
/// parameter Jacobian of the stationarity condition is the identity and the
/// result is the x-block of the adjoint KKT solve.
inline Eigen::VectorXd backward_qp(const QpProblem& prob, const LayerSolution& sol,
                                   const Eigen::VectorXd& upstream,
                                   KktSolveStats* stats = nullptr) {
  prob.validate();
  if (sol.x.size() != prob.size() || sol.lambda.size() != prob.G.rows()) {
    throw ShapeMismatch("solution does not match problem dimensions");
  }
  return solve_kkt_adjoint(detail::qp_kkt_system(prob, sol), upstream, stats);
}

/// Full Jacobian dx/dtheta (n x n).
inline Eigen::MatrixXd qp_jacobian(const QpProblem& prob, const LayerSolution& sol,
                                   KktSolveStats* stats = nullptr) {
  const Eigen::Index n = prob.size();
  return solve_kkt_forward(detail::qp_kkt_system(prob, sol), Eigen::MatrixXd::Identity(n, n), stats);
}

enum class IntegralStructure { BipartiteMatching, TopK, GenericLp };

/// Optimal integral solution of the unregularized LP (gamma is ignored).
/// BipartiteMatching expects the row-major s x s layout of matching_to_qp;
/// TopK reads the budget from the all-ones row of G (at most k) or A
/// (exactly k).
inline Eigen::VectorXd solve_integral(const QpProblem& prob, IntegralStructure structure) {
  prob.validate();
  const Eigen::Index n = prob.size();
  switch (structure) {
    case IntegralStructure::BipartiteMatching: {
      const auto s = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
      if (s * s != n) throw UnsupportedStructure("matching needs a square number of variables");
      Eigen::MatrixXd w(s, s);
      for (Eigen::Index i = 0; i < s; ++i) w.row(i) = prob.theta.segment(i * s, s).transpose();
      return matching_indicator(max_weight_matching(w));
    }
    case IntegralStructure::TopK: {
      auto ones_row = [&](const Eigen::MatrixXd& m) -> Eigen::Index {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          if ((m.row(r).array() - 1.0).abs().maxCoeff() <= 1e-12) return r;
        }
        return -1;
      };
      bool exact = false;
      double budget = 0.0;
      if (const Eigen::Index r = ones_row(prob.A); r >= 0) {
        exact = true;
        budget = prob.b(r);
      } else if (const Eigen::Index g = ones_row(prob.G); g >= 0) {
        budget = prob.h(g);
      } else {
        throw UnsupportedStructure("no cardinality row found for top-k");
      }
      const auto k = static_cast<Eigen::Index>(std::floor(budget + 1e-9));
      if (k < 0 || k > n) throw UnsupportedStructure("cardinality budget out of range");
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return prob.theta(a) > prob.theta(b); });
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(j)];
        if (!exact && prob.theta(i) <= 0.0) break;
        x(i) = 1.0;
      }
      return x;
    }
    case IntegralStructure::GenericLp: {
      const LpSolution lp = solve_lp(prob.theta, prob.A.rows() ? prob.A : Eigen::MatrixXd(0, n), prob.b,
                                     prob.G.rows() ? prob.G : Eigen::MatrixXd(0, n), prob.h);
      Eigen::VectorXd x = lp.x.array().round();
      if ((x - lp.x).lpNorm<Eigen::Infinity>() > 1e-7) {
        throw UnsupportedStructure("LP optimum found by simplex is not integral");
      }
      return x;
    }
  }
  throw UnsupportedStructure("unknown structure");
}

// Text format: "n p m gamma", then p rows of A|b, m rows of G|h, then theta.

inline void write_qp(std::ostream& os, const QpProblem& prob) {
  prob.validate();
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  os << prob.size() << ' ' << prob.A.rows() << ' ' << prob.G.rows() << ' ';
  put(prob.gamma);
  os << '\n';
  auto rows = [&](const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        put(m(i, j));
        os << ' ';
      }
      put(rhs(i));
      os << '\n';
    }
  };
  rows(prob.A, prob.b);
  rows(prob.G, prob.h);
  for (Eigen::Index j = 0; j < prob.size(); ++j) {
    if (j) os << ' ';
    put(prob.theta(j));
  }
  os << '\n';
}

inline QpProblem read_qp(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next_values = [&](std::size_t expect) {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      std::vector<double> vals;
      double v = 0.0;
      while (ls >> v) vals.push_back(v);
      if (!ls.eof()) throw ParseError("non-numeric token", line_no);
      if (vals.size() != expect) {
        throw ParseError("expected " + std::to_string(expect) + " values, found " +
                             std::to_string(vals.size()), line_no);
      }
      return vals;
    }
    throw ParseError("unexpected end of file", line_no + 1);
  };
  const std::vector<double> head = next_values(4);
  for (int i = 0; i < 3; ++i) {
    if (head[i] < 0 || head[i] != std::floor(head[i])) throw ParseError("bad dimension in header", line_no);
  }
  const auto n = static_cast<Eigen::Index>(head[0]);
  const auto p = static_cast<Eigen::Index>(head[1]);
  const auto m = static_cast<Eigen::Index>(head[2]);
  QpProblem prob;
  prob.gamma = head[3];
  prob.A.resize(p, n);
  prob.b.resize(p);
  prob.G.resize(m, n);
  prob.h.resize(m);
  prob.theta.resize(n);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto v = next_values(static_cast<std::size_t>(n + 1));
    for (Eigen::Index j = 0; j < n; ++j) prob.A(i, j) = v[static_cast<std::size_t>(j)];
    prob.b(i) = v.back();
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto v = next_values(static_cast<std::size_t>(n + 1));
    for (Eigen::Index j = 0; j < n; ++j) prob.G(i, j) = v[static_cast<std::size_t>(j)];
    prob.h(i) = v.back();
  }
  const auto t = next_values(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) prob.theta(j) = t[static_cast<std::size_t>(j)];
  if (prob.gamma < 0.0) throw ParseError("gamma must be nonnegative", 1);
  return prob;
}

/// Box 0 <= x <= 1 as inequality rows [-I; I], h = [0; 1].
inline void unit_box(Eigen::Index n, Eigen::MatrixXd& g, Eigen::VectorXd& h) {
  g.resize(2 * n, n);
  g << -Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n);
  h.resize(2 * n);
  h << Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n);
}

}  // namespace dfl

#endif  // DFL_QP_LAYER_HPP_
