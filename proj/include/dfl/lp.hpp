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

#ifndef DFL_LP_HPP_
#define DFL_LP_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "dfl/errors.hpp"

namespace dfl {

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
};

namespace detail {

// Dense tableau with Bland's rule. Rows are constraints; the last column is
// the right-hand side. cost holds reduced costs with -value in the last slot.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd rows, std::vector<Eigen::Index> basis)
      : t_(std::move(rows)), basis_(std::move(basis)) {}

  Eigen::Index cols() const { return t_.cols() - 1; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  const Eigen::MatrixXd& rows() const { return t_; }

  void set_cost(const Eigen::VectorXd& c) {
    cost_ = Eigen::VectorXd::Zero(t_.cols());
    cost_.head(cols()) = c;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      cost_ -= c(basis_[i]) * t_.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }

  double value() const { return -cost_(cols()); }

  // Minimizes the current cost over columns where allowed[j] is true.
  // Returns false when the problem is unbounded.
  bool minimize(const std::vector<char>& allowed) {
    constexpr double eps = 1e-10;
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (allowed[j] && cost_(j) < -eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < t_.rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= eps) continue;
        const double ratio = t_(i, cols()) / a;
        if (leave < 0 || ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw NoConvergence("simplex pivot limit reached", 0.0);
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    if (cost_(c) != 0.0) cost_ -= cost_(c) * t_.row(r).transpose();
    basis_[r] = c;
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
  Eigen::VectorXd cost_;
};

}  // namespace detail

/// Exact vertex solution of  max theta^T x  s.t.  A x = b, G x <= h  with x
/// free, by two-phase primal simplex. Throws Infeasible, or Error when the
/// objective is unbounded.
inline LpSolution solve_lp(const Eigen::VectorXd& theta, const Eigen::MatrixXd& a,
                           const Eigen::VectorXd& b, const Eigen::MatrixXd& g,
                           const Eigen::VectorXd& h) {
  const Eigen::Index n = theta.size();
  const Eigen::Index p = a.rows();
  const Eigen::Index m = g.rows();
  if (a.cols() != n || g.cols() != n || b.size() != p || h.size() != m) {
    throw ShapeMismatch("LP data has inconsistent shapes");
  }
  // Columns: x+ (n), x- (n), slack (m), artificial (p + m).
  const Eigen::Index rows = p + m;
  const Eigen::Index structural = 2 * n + m;
  const Eigen::Index total = structural + rows;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows, total + 1);
  t.block(0, 0, p, n) = a;
  t.block(0, n, p, n) = -a;
  t.block(0, total, p, 1) = b;
  t.block(p, 0, m, n) = g;
  t.block(p, n, m, n) = -g;
  t.block(p, 2 * n, m, m) = Eigen::MatrixXd::Identity(m, m);
  t.block(p, total, m, 1) = h;
  std::vector<Eigen::Index> basis(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (t(i, total) < 0.0) t.row(i) *= -1.0;
    t(i, structural + i) = 1.0;
    basis[i] = structural + i;
  }

  detail::Tableau tab(std::move(t), std::move(basis));
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
  phase1.tail(rows).setOnes();
  tab.set_cost(phase1);
  std::vector<char> allowed(total, 1);
  tab.minimize(allowed);
  if (tab.value() > 1e-7) throw Infeasible("LP feasible region is empty");

  // Pivot remaining artificials out of the basis where possible; rows with
  // no structural entry are redundant and keep a zero artificial.
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (tab.basis()[i] < structural) continue;
    for (Eigen::Index j = 0; j < structural; ++j) {
      if (std::abs(tab.rows()(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  for (Eigen::Index j = structural; j < total; ++j) allowed[j] = 0;

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  phase2.head(n) = -theta;
  phase2.segment(n, n) = theta;
  tab.set_cost(phase2);
  if (!tab.minimize(allowed)) throw Error("LP objective is unbounded");

  Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
  for (std::size_t i = 0; i < tab.basis().size(); ++i) {
    y(tab.basis()[i]) = tab.rows()(static_cast<Eigen::Index>(i), total);
  }
  LpSolution out;
  out.x = y.head(n) - y.segment(n, n);
  out.objective = theta.dot(out.x);
  return out;
}

}  // namespace dfl

#endif  // DFL_LP_HPP_
