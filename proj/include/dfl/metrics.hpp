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

#ifndef DFL_METRICS_HPP_
#define DFL_METRICS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dfl/domains.hpp"
#include "dfl/errors.hpp"
#include "dfl/submod_layer.hpp"

namespace dfl {

/// Objective of `decision` under the true parameters.
///   budget / recommendation: 0/1 indicator over rows with at most k ones;
///     value is the coverage function with unit item weights.
///   matching: 0/1 indicator over the s*s edges (row-major) forming a
///     matching; value is the summed true edge weight.
inline double decision_quality(Domain domain, const Eigen::VectorXd& decision, const Eigen::MatrixXd& theta_true,
                               int k = 0) {
  for (Eigen::Index i = 0; i < decision.size(); ++i) {
    if (decision(i) != 0.0 && decision(i) != 1.0) throw InfeasibleDecision("decision is not a 0/1 vector");
  }
  if (domain == Domain::Matching) {
    if (theta_true.size() != decision.size()) throw ShapeMismatch("decision length differs from edge count");
    const Eigen::MatrixXd x = edges_to_square(decision);
    if (x.rowwise().sum().maxCoeff() > 1.0 || x.colwise().sum().maxCoeff() > 1.0) {
      throw InfeasibleDecision("decision uses a node twice");
    }
    if (theta_true.cols() == 1) return theta_true.col(0).dot(decision);
    return (x.array() * theta_true.array()).sum();
  }
  if (theta_true.rows() != decision.size()) throw ShapeMismatch("decision length differs from action count");
  if (decision.sum() > static_cast<double>(k)) throw InfeasibleDecision("decision exceeds the budget k");
  CoverageInstance c;
  c.theta = theta_true;
  c.w = Eigen::VectorXd::Ones(theta_true.cols());
  c.k = std::max(1, k);
  return coverage_value(decision, c);
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half. Computed from midranks.
inline double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("scores and labels differ in length");
  const Eigen::Index n = scores.size();
  double pos = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) throw DomainError("AUC labels must be 0 or 1");
    pos += labels(i);
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DegenerateLabels("AUC needs at least one positive and one negative label");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores(order[j]) == scores(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) rank_sum += labels(order[t]) * midrank;
    i = j;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ShapeMismatch("shapes differ");
  if (pred.size() == 0) throw ShapeMismatch("empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

/// Mean binary cross-entropy; predictions must lie in (0, 1).
inline double cross_entropy(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ShapeMismatch("shapes differ");
  if (pred.size() == 0) throw ShapeMismatch("empty input");
  if (pred.minCoeff() <= 0.0 || pred.maxCoeff() >= 1.0) throw DomainError("predictions must lie in (0, 1)");
  if (target.minCoeff() < 0.0 || target.maxCoeff() > 1.0) throw DomainError("targets must lie in [0, 1]");
  const Eigen::ArrayXXd p = pred.array(), t = target.array();
  return -(t * p.log() + (1.0 - t) * (-p).log1p()).mean();
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeMismatch("correlation needs two equal-length vectors");
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return denom > 0.0 ? da.dot(db) / denom : 0.0;
}

struct ConfidenceInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval for the mean.
inline ConfidenceInterval bootstrap_ci(const std::vector<double>& values, int draws = 10000, double level = 0.95,
                                       std::uint64_t seed = 0) {
  if (values.empty()) throw DomainError("bootstrap needs at least one value");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (draws < 1) throw DomainError("bootstrap needs at least one draw");
  const double n = static_cast<double>(values.size());
  ConfidenceInterval ci;
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(draws));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
    m = s / n;
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  ci.low = std::min(quantile(tail), ci.mean);
  ci.high = std::max(quantile(1.0 - tail), ci.mean);
  return ci;
}

}  // namespace dfl

#endif  // DFL_METRICS_HPP_
