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

#ifndef DFL_SUBMOD_LAYER_HPP_
#define DFL_SUBMOD_LAYER_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/kkt.hpp"

namespace dfl {

/// Probabilistic coverage problem: action i covers item j independently with
/// probability theta(i, j); item j is worth w(j). At most k actions.
struct CoverageInstance {
  Eigen::MatrixXd theta;  // |V| x |U|
  Eigen::VectorXd w;      // |U|
  int k = 1;

  Eigen::Index actions() const { return theta.rows(); }
  Eigen::Index items() const { return theta.cols(); }

  void validate() const {
    if (w.size() != theta.cols()) throw ShapeMismatch("weight length differs from item count");
    if (theta.size() > 0 && (theta.minCoeff() < 0.0 || theta.maxCoeff() > 1.0)) {
      throw DomainError("coverage probabilities must lie in [0, 1]");
    }
    if (w.size() > 0 && w.minCoeff() < 0.0) throw DomainError("item weights must be nonnegative");
    if (k < 1 || k > theta.rows()) throw DomainError("budget k must satisfy 1 <= k <= |V|");
  }
};

namespace detail {

// Products of the factors 1 - x_l theta_lj for one item with one or two
// indices left out. Zero factors are counted rather than multiplied so the
// left-out products stay exact when some factor vanishes.
class ItemProducts {
 public:
  ItemProducts(const Eigen::VectorXd& x, const Eigen::MatrixXd& theta, Eigen::Index item)
      : factor_(theta.rows()) {
    for (Eigen::Index l = 0; l < theta.rows(); ++l) {
      const double f = 1.0 - x(l) * theta(l, item);
      factor_(l) = f;
      if (f == 0.0) {
        ++zeros_;
      } else {
        nonzero_ *= f;
      }
    }
  }

  double all() const { return zeros_ > 0 ? 0.0 : nonzero_; }

  double without(Eigen::Index i) const {
    const double fi = factor_(i);
    const int z = zeros_ - (fi == 0.0 ? 1 : 0);
    if (z > 0) return 0.0;
    return fi == 0.0 ? nonzero_ : nonzero_ / fi;
  }

  double without(Eigen::Index i, Eigen::Index k) const {
    const double fi = factor_(i);
    const double fk = factor_(k);
    const int z = zeros_ - (fi == 0.0 ? 1 : 0) - (fk == 0.0 ? 1 : 0);
    if (z > 0) return 0.0;
    double p = nonzero_;
    if (fi != 0.0) p /= fi;
    if (fk != 0.0) p /= fk;
    return p;
  }

 private:
  Eigen::VectorXd factor_;
  double nonzero_ = 1.0;
  int zeros_ = 0;
};

inline void check_point(const Eigen::VectorXd& x, const CoverageInstance& inst) {
  if (x.size() != inst.actions()) throw ShapeMismatch("point length differs from action count");
  if (inst.w.size() != inst.items()) throw ShapeMismatch("weight length differs from item count");
}

}  // namespace detail

/// Discrete coverage value f(S) for a 0/1 indicator of S.
inline double coverage_value(const Eigen::VectorXd& indicator, const CoverageInstance& inst) {
  detail::check_point(indicator, inst);
  double total = 0.0;
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    double miss = 1.0;
    for (Eigen::Index i = 0; i < inst.actions(); ++i) {
      if (indicator(i) != 0.0) miss *= 1.0 - inst.theta(i, j);
    }
    total += inst.w(j) * (1.0 - miss);
  }
  return total;
}

/// Multilinear extension F(x) = sum_j w_j (1 - prod_i (1 - x_i theta_ij)).
inline double extension_value(const Eigen::VectorXd& x, const CoverageInstance& inst) {
  detail::check_point(x, inst);
  double total = 0.0;
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    total += inst.w(j) * (1.0 - detail::ItemProducts(x, inst.theta, j).all());
  }
  return total;
}

inline Eigen::VectorXd extension_grad_x(const Eigen::VectorXd& x, const CoverageInstance& inst) {
  detail::check_point(x, inst);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(inst.actions());
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    if (inst.w(j) == 0.0) continue;
    const detail::ItemProducts prod(x, inst.theta, j);
    for (Eigen::Index i = 0; i < inst.actions(); ++i) {
      g(i) += inst.w(j) * inst.theta(i, j) * prod.without(i);
    }
  }
  return g;
}

/// Symmetric, zero diagonal, nonpositive off-diagonal.
inline Eigen::MatrixXd extension_hessian_x(const Eigen::VectorXd& x, const CoverageInstance& inst) {
  detail::check_point(x, inst);
  const Eigen::Index n = inst.actions();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    if (inst.w(j) == 0.0) continue;
    const detail::ItemProducts prod(x, inst.theta, j);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ti = inst.theta(i, j);
      if (ti == 0.0) continue;
      for (Eigen::Index k = i + 1; k < n; ++k) {
        const double v = -inst.w(j) * ti * inst.theta(k, j) * prod.without(i, k);
        h(i, k) += v;
        h(k, i) += v;
      }
    }
  }
  return h;
}

/// Derivatives d(grad_{x_i} F)/d theta_{kj} for one item j as a |V| x |V|
/// matrix indexed (i, k):
///   w_j prod_{l != i} (1 - x_l theta_lj)                 if k == i
///  -w_j theta_ij x_k prod_{l != i,k} (1 - x_l theta_lj)   otherwise.
/// The full tensor is the stack of these blocks over j; callers that only
/// need contractions should stream over items instead of storing it.
inline Eigen::MatrixXd grad_theta_block(const Eigen::VectorXd& x, const CoverageInstance& inst,
                                        Eigen::Index item) {
  detail::check_point(x, inst);
  const Eigen::Index n = inst.actions();
  const double wj = inst.w(item);
  const detail::ItemProducts prod(x, inst.theta, item);
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      b(i, k) = k == i ? wj * prod.without(i)
                       : -wj * inst.theta(i, item) * x(k) * prod.without(i, k);
    }
  }
  return b;
}

/// Full tensor as one block per item (see grad_theta_block).
inline std::vector<Eigen::MatrixXd> grad_theta_of_grad_x(const Eigen::VectorXd& x,
                                                         const CoverageInstance& inst) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(static_cast<std::size_t>(inst.items()));
  for (Eigen::Index j = 0; j < inst.items(); ++j) blocks.push_back(grad_theta_block(x, inst, j));
  return blocks;
}

/// R(k, j) = sum_i z_i d(grad_{x_i} F)/d theta_{kj}, streamed per item.
inline Eigen::MatrixXd contract_grad_theta(const Eigen::VectorXd& x, const CoverageInstance& inst,
                                           const Eigen::VectorXd& z) {
  detail::check_point(x, inst);
  const Eigen::Index n = inst.actions();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, inst.items());
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    const double wj = inst.w(j);
    if (wj == 0.0) continue;
    const detail::ItemProducts prod(x, inst.theta, j);
    for (Eigen::Index k = 0; k < n; ++k) {
      double acc = z(k) * prod.without(k);
      if (x(k) != 0.0) {
        double cross = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (i == k || z(i) == 0.0 || inst.theta(i, j) == 0.0) continue;
          cross += z(i) * inst.theta(i, j) * prod.without(i, k);
        }
        acc -= x(k) * cross;
      }
      out(k, j) = wj * acc;
    }
  }
  return out;
}

/// Euclidean projection onto {x in [0,1]^n : sum x <= k}. Bisection on the
/// budget multiplier tau (x = clip(v - tau)) to 1e-10, then the exact tau
/// for the identified free set.
inline Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double k) {
  if (k < 0.0) throw DomainError("capped simplex budget must be nonnegative");
  auto clip = [&](double tau) { return Eigen::VectorXd((v.array() - tau).cwiseMax(0.0).cwiseMin(1.0)); };
  Eigen::VectorXd x = clip(0.0);
  if (x.sum() <= k) return x;
  double lo = 0.0;
  double hi = v.maxCoeff();
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (clip(mid).sum() > k) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double tau = 0.5 * (lo + hi);
  double free_sum = 0.0;
  int free_count = 0;
  int ones = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double y = v(i) - tau;
    if (y >= 1.0) {
      ++ones;
    } else if (y > 0.0) {
      free_sum += v(i);
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum + ones - k) / free_count;
    if (std::abs(exact - tau) <= 1e-8) tau = exact;
  }
  x = clip(tau);
  return x;
}

struct SgaOptions {
  int steps = 100;
  double step_size = 0.05;
  double init_noise = 0.01;
  double stationarity_tol = 1e-6;
  // Fraction of items sampled per step (reweighted to stay unbiased); 1
  // uses the exact gradient.
  double item_fraction = 1.0;
};

struct SgaResult {
  Eigen::VectorXd x;
  double gradient_mapping_norm = 0.0;
  bool converged = false;
};

/// Projected gradient ascent on the multilinear extension over the capped
/// simplex, started at (k/|V|) 1 plus uniform noise.
inline SgaResult sga_maximize(const CoverageInstance& inst, const SgaOptions& opts,
                              std::uint64_t seed) {
  inst.validate();
  if (opts.steps < 1) throw DomainError("SGA needs at least one step");
  const Eigen::Index n = inst.actions();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-opts.init_noise, opts.init_noise);
  Eigen::VectorXd x(n);
  const double start = static_cast<double>(inst.k) / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = start + (opts.init_noise > 0.0 ? noise(rng) : 0.0);
  x = project_capped_simplex(x, inst.k);

  const bool subsample = opts.item_fraction < 1.0;
  CoverageInstance sampled = inst;
  std::bernoulli_distribution keep(std::clamp(opts.item_fraction, 1e-12, 1.0));
  for (int t = 0; t < opts.steps; ++t) {
    Eigen::VectorXd g;
    if (subsample) {
      for (Eigen::Index j = 0; j < inst.items(); ++j) {
        sampled.w(j) = keep(rng) ? inst.w(j) / opts.item_fraction : 0.0;
      }
      g = extension_grad_x(x, sampled);
    } else {
      g = extension_grad_x(x, inst);
    }
    x = project_capped_simplex(x + opts.step_size * g, inst.k);
  }
  SgaResult out;
  const Eigen::VectorXd g = extension_grad_x(x, inst);
  out.gradient_mapping_norm = (x - project_capped_simplex(x + opts.step_size * g, inst.k)).norm();
  out.converged = out.gradient_mapping_norm <= opts.stationarity_tol;
  out.x = std::move(x);
  return out;
}

/// Multipliers for  x >= 0 (lower), x <= 1 (upper), sum x <= k (budget) in
/// maximize form:  grad F = budget 1 - lower + upper,  all nonnegative.
struct CardinalityDuals {
  double budget = 0.0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct DualRecoveryOptions {
  double tolerance = 1e-4;
  // Return best-effort multipliers instead of throwing NotStationary; used
  // when differentiating through an SGA iterate that has not fully settled.
  bool lenient = false;
  double bound_eps = 1e-9;
};

/// Closed-form multipliers at a (near) stationary point: the budget
/// multiplier is the common gradient of the fractional coordinates, and
/// each bound multiplier takes up the gap between its gradient and it.
inline CardinalityDuals recover_duals(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, int k,
                                      const DualRecoveryOptions& opts = {}) {
  if (grad.size() != x.size()) throw ShapeMismatch("gradient length differs from point length");
  const Eigen::Index n = x.size();
  const double tol = opts.tolerance;
  auto fail = [&](const std::string& why) {
    if (!opts.lenient) throw NotStationary(why);
  };
  std::vector<Eigen::Index> free, at_zero, at_one;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) <= opts.bound_eps) {
      at_zero.push_back(i);
    } else if (x(i) >= 1.0 - opts.bound_eps) {
      at_one.push_back(i);
    } else {
      free.push_back(i);
    }
  }
  const bool tight = x.sum() >= static_cast<double>(k) - 1e-7;

  CardinalityDuals d;
  if (!free.empty()) {
    double mean = 0.0;
    for (const Eigen::Index i : free) mean += grad(i);
    mean /= static_cast<double>(free.size());
    double spread = 0.0;
    for (const Eigen::Index i : free) spread = std::max(spread, std::abs(grad(i) - mean));
    if (spread > tol) fail("fractional coordinates have unequal gradients");
    if (tight) {
      d.budget = mean;
      if (mean < -tol) fail("negative budget multiplier");
    } else {
      if (std::abs(mean) > tol) fail("budget is slack but fractional gradients are nonzero");
      d.budget = 0.0;
    }
  } else if (tight) {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (const Eigen::Index i : at_zero) lo = std::max(lo, grad(i));
    for (const Eigen::Index i : at_one) hi = std::min(hi, grad(i));
    if (lo > hi + tol) fail("unselected coordinate has a larger gradient than a selected one");
    d.budget = std::isfinite(hi) ? 0.5 * (lo + std::max(lo, hi)) : lo;
  }
  d.budget = std::max(0.0, d.budget);

  d.lower = Eigen::VectorXd::Zero(n);
  d.upper = Eigen::VectorXd::Zero(n);
  for (const Eigen::Index i : at_zero) {
    const double v = d.budget - grad(i);
    if (v < -tol) fail("negative lower-bound multiplier");
    d.lower(i) = std::max(0.0, v);
  }
  for (const Eigen::Index i : at_one) {
    const double v = grad(i) - d.budget;
    if (v < -tol) fail("negative upper-bound multiplier");
    d.upper(i) = std::max(0.0, v);
  }
  return d;
}

/// Largest violation among stationarity, dual sign, and complementary
/// slackness for the cardinality polytope.
inline double cardinality_kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, int k,
                                       const CardinalityDuals& d) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd stat =
      grad - (Eigen::VectorXd::Constant(n, d.budget) - d.lower + d.upper);
  double r = stat.lpNorm<Eigen::Infinity>();
  r = std::max(r, -std::min({0.0, d.budget, d.lower.minCoeff(), d.upper.minCoeff()}));
  r = std::max(r, d.lower.cwiseProduct(x).lpNorm<Eigen::Infinity>());
  r = std::max(r, d.upper.cwiseProduct((x.array() - 1.0).matrix()).lpNorm<Eigen::Infinity>());
  r = std::max(r, std::abs(d.budget * (x.sum() - static_cast<double>(k))));
  return r;
}

namespace detail {

inline KktSystem cardinality_kkt_system(const CoverageInstance& inst, const Eigen::VectorXd& x,
                                        const CardinalityDuals& d) {
  const Eigen::Index n = inst.actions();
  KktSystem sys;
  // The curvature block is the Hessian of F itself. F is convex along
  // e_i - e_j, so this block is positive definite on the budget face at the
  // points projected ascent settles on; a fractional iterate responds to a
  // larger gradient by moving toward it.
  sys.curvature = extension_hessian_x(x, inst);
  sys.ineq.resize(2 * n + 1, n);
  sys.ineq << -Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
      Eigen::RowVectorXd::Ones(n);
  sys.ineq_duals.resize(2 * n + 1);
  sys.ineq_duals << d.lower, d.upper, d.budget;
  sys.ineq_residual.resize(2 * n + 1);
  sys.ineq_residual << -x, (x.array() - 1.0).matrix(), x.sum() - static_cast<double>(inst.k);
  sys.eq.resize(0, n);
  return sys;
}

}  // namespace detail

/// dLoss/dtheta (|V| x |U|) given upstream = dLoss/dx at x.
inline Eigen::MatrixXd backward_submod(const CoverageInstance& inst, const Eigen::VectorXd& x,
                                       const CardinalityDuals& duals, const Eigen::VectorXd& upstream,
                                       KktSolveStats* stats = nullptr) {
  inst.validate();
  detail::check_point(x, inst);
  if (upstream.size() != x.size()) throw ShapeMismatch("upstream length differs from action count");
  if (upstream.isZero(0.0)) return Eigen::MatrixXd::Zero(inst.actions(), inst.items());
  const Eigen::VectorXd z =
      solve_kkt_adjoint(detail::cardinality_kkt_system(inst, x, duals), upstream, stats);
  return contract_grad_theta(x, inst, z);
}

/// Dense dx/dtheta for tests: column (k + j |V|) is dx/dtheta_kj.
inline Eigen::MatrixXd submod_jacobian(const CoverageInstance& inst, const Eigen::VectorXd& x,
                                       const CardinalityDuals& duals, KktSolveStats* stats = nullptr) {
  const Eigen::Index n = inst.actions();
  Eigen::MatrixXd rhs(n, n * inst.items());
  for (Eigen::Index j = 0; j < inst.items(); ++j) rhs.middleCols(j * n, n) = grad_theta_block(x, inst, j);
  return solve_kkt_forward(detail::cardinality_kkt_system(inst, x, duals), rhs, stats);
}

/// Rounds a point of the capped simplex to a set with E[f(S)] >= F(x).
/// Pairs of fractional coordinates are moved along e_i - e_j (where F is
/// convex) to whichever end is better; a last fractional coordinate is
/// rounded by a Bernoulli draw, on which F is linear.
inline Eigen::VectorXd pipage_round(const Eigen::VectorXd& x0, const CoverageInstance& inst,
                                    std::uint64_t seed) {
  detail::check_point(x0, inst);
  constexpr double eps = 1e-9;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x = x0;
  auto snap = [&](Eigen::Index i) {
    if (x(i) <= eps) x(i) = 0.0;
    if (x(i) >= 1.0 - eps) x(i) = 1.0;
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) snap(i);
  auto fractional = [&] {
    std::vector<Eigen::Index> f;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) > 0.0 && x(i) < 1.0) f.push_back(i);
    }
    return f;
  };
  for (auto f = fractional(); f.size() >= 2; f = fractional()) {
    const Eigen::Index i = f[0];
    const Eigen::Index j = f[1];
    const double up = std::min(1.0 - x(i), x(j));
    const double down = std::min(x(i), 1.0 - x(j));
    Eigen::VectorXd a = x, b = x;
    a(i) += up;
    a(j) -= up;
    b(i) -= down;
    b(j) += down;
    const double fa = extension_value(a, inst);
    const double fb = extension_value(b, inst);
    const bool take_a = fa > fb || (fa == fb && unit(rng) < 0.5);
    x = take_a ? a : b;
    snap(i);
    snap(j);
  }
  for (const Eigen::Index i : fractional()) x(i) = unit(rng) < x(i) ? 1.0 : 0.0;
  return x;
}

/// Lazy greedy (stale marginal gains as upper bounds) for monotone
/// submodular coverage; always returns exactly min(k, |V|) actions.
inline Eigen::VectorXd greedy_max(const CoverageInstance& inst) {
  const Eigen::Index n = inst.actions();
  Eigen::VectorXd miss = Eigen::VectorXd::Ones(inst.items());
  auto gain = [&](Eigen::Index i) {
    double g = 0.0;
    for (Eigen::Index j = 0; j < inst.items(); ++j) g += inst.w(j) * miss(j) * inst.theta(i, j);
    return g;
  };
  using Entry = std::pair<double, Eigen::Index>;
  auto cmp = [](const Entry& a, const Entry& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (Eigen::Index i = 0; i < n; ++i) heap.emplace(gain(i), i);
  Eigen::VectorXd chosen = Eigen::VectorXd::Zero(n);
  const Eigen::Index budget = std::min<Eigen::Index>(inst.k, n);
  std::vector<int> stamp(static_cast<std::size_t>(n), 0);
  int round = 0;
  while (round < budget && !heap.empty()) {
    auto [g, i] = heap.top();
    heap.pop();
    if (stamp[i] != round) {
      stamp[i] = round;
      heap.emplace(gain(i), i);
      continue;
    }
    chosen(i) = 1.0;
    for (Eigen::Index j = 0; j < inst.items(); ++j) miss(j) *= 1.0 - inst.theta(i, j);
    ++round;
  }
  return chosen;
}

/// Exhaustive maximum over all sets with |S| <= k. Throws TooLarge when the
/// number of candidate sets exceeds max_sets.
inline Eigen::VectorXd brute_force_max(const CoverageInstance& inst, double max_sets = 2e6) {
  const Eigen::Index n = inst.actions();
  const Eigen::Index k = std::min<Eigen::Index>(inst.k, n);
  double count = 0.0;
  double binom = 1.0;
  for (Eigen::Index s = 0; s <= k; ++s) {
    if (s > 0) binom = binom * static_cast<double>(n - s + 1) / static_cast<double>(s);
    count += binom;
  }
  if (count > max_sets) throw TooLarge("brute force would enumerate too many sets");
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_val = 0.0;
  std::vector<Eigen::Index> idx;
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(n);
  // Depth-first over increasing index lists.
  auto visit = [&](auto&& self, Eigen::Index from) -> void {
    const double v = coverage_value(cur, inst);
    if (v > best_val) {
      best_val = v;
      best = cur;
    }
    if (static_cast<Eigen::Index>(idx.size()) == k) return;
    for (Eigen::Index i = from; i < n; ++i) {
      cur(i) = 1.0;
      idx.push_back(i);
      self(self, i + 1);
      idx.pop_back();
      cur(i) = 0.0;
    }
  };
  visit(visit, 0);
  return best;
}

// Text format: "|V| |U| k", then the weight line, then |V| rows of theta.

inline void write_coverage(std::ostream& os, const CoverageInstance& inst) {
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  os << inst.actions() << ' ' << inst.items() << ' ' << inst.k << '\n';
  for (Eigen::Index j = 0; j < inst.items(); ++j) {
    if (j) os << ' ';
    put(inst.w(j));
  }
  os << '\n';
  for (Eigen::Index i = 0; i < inst.actions(); ++i) {
    for (Eigen::Index j = 0; j < inst.items(); ++j) {
      if (j) os << ' ';
      put(inst.theta(i, j));
    }
    os << '\n';
  }
}

inline CoverageInstance read_coverage(std::istream& is) {
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
  const auto head = next_values(3);
  for (double d : head) {
    if (d < 0 || d != std::floor(d)) throw ParseError("bad dimension in header", line_no);
  }
  CoverageInstance inst;
  const auto nv = static_cast<Eigen::Index>(head[0]);
  const auto nu = static_cast<Eigen::Index>(head[1]);
  inst.k = static_cast<int>(head[2]);
  inst.w.resize(nu);
  inst.theta.resize(nv, nu);
  const auto w = next_values(static_cast<std::size_t>(nu));
  for (Eigen::Index j = 0; j < nu; ++j) inst.w(j) = w[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 0; i < nv; ++i) {
    const auto row = next_values(static_cast<std::size_t>(nu));
    for (Eigen::Index j = 0; j < nu; ++j) inst.theta(i, j) = row[static_cast<std::size_t>(j)];
  }
  try {
    inst.validate();
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
  return inst;
}

}  // namespace dfl

#endif  // DFL_SUBMOD_LAYER_HPP_
