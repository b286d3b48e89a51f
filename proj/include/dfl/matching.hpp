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

#ifndef DFL_MATCHING_HPP_
#define DFL_MATCHING_HPP_

#include <Eigen/Dense>

#include <limits>
#include <vector>

#include "dfl/errors.hpp"

namespace dfl {

/// Maximum-weight bipartite matching on a square weight matrix via
/// shortest augmenting paths with vertex potentials (Hungarian method).
///
/// Returns mate[i] = column matched to row i, or -1. Edges with weight <= 0
/// are never used, so the result is a maximum-weight (not necessarily
/// perfect) matching.
inline std::vector<int> max_weight_matching(const Eigen::MatrixXd& weights) {
  const int s = static_cast<int>(weights.rows());
  if (weights.cols() != s) {
    throw ShapeMismatch("matching weights must be square");
  }
  if (s == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Min-cost assignment on cost = -max(w, 0); 1-based arrays, column 0 is
  // the virtual root of each augmenting search.
  auto cost = [&](int i, int j) { return -std::max(weights(i - 1, j - 1), 0.0); };
  std::vector<double> u(s + 1, 0.0), v(s + 1, 0.0);
  std::vector<int> p(s + 1, 0), way(s + 1, 0);
  for (int i = 1; i <= s; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(s + 1, inf);
    std::vector<char> used(s + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= s; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> mate(s, -1);
  for (int j = 1; j <= s; ++j) {
    if (p[j] != 0 && weights(p[j] - 1, j - 1) > 0.0) mate[p[j] - 1] = j - 1;
  }
  return mate;
}

/// Row-major indicator of a matching (x[i*s + j] = 1 iff i matched to j).
inline Eigen::VectorXd matching_indicator(const std::vector<int>& mate) {
  const auto s = static_cast<Eigen::Index>(mate.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(s * s);
  for (Eigen::Index i = 0; i < s; ++i) {
    if (mate[i] >= 0) x(i * s + mate[i]) = 1.0;
  }
  return x;
}

}  // namespace dfl

#endif  // DFL_MATCHING_HPP_
