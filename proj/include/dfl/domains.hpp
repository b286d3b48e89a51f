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

#ifndef DFL_DOMAINS_HPP_
#define DFL_DOMAINS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/qp_layer.hpp"
#include "dfl/submod_layer.hpp"
#include "dfl/text_io.hpp"

namespace dfl {

enum class Domain { Budget, Matching, Recommendation };

inline const char* domain_name(Domain d) {
  switch (d) {
    case Domain::Budget:
      return "budget";
    case Domain::Matching:
      return "matching";
    case Domain::Recommendation:
      return "recommendation";
  }
  return "budget";
}

inline std::optional<Domain> parse_domain(const std::string& s) {
  if (s == "budget") return Domain::Budget;
  if (s == "matching") return Domain::Matching;
  if (s == "recommendation") return Domain::Recommendation;
  return std::nullopt;
}

/// Largest allowed budget-allocation probability.
inline constexpr double kBudgetThetaMax = 0.2;

/// One optimization instance. Each row of `features` predicts the matching
/// row of `targets`:
///   budget          channels x customers, theta in [0, 0.2]
///   matching        s*s edges (row-major) x 1, binary
///   recommendation  items x topics, binary
struct DatasetInstance {
  Domain domain = Domain::Budget;
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  int k = 0;  // cardinality budget; unused for matching

  /// Side length s of the matching graph.
  Eigen::Index side() const {
    const auto s = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(targets.rows()))));
    if (s * s != targets.rows()) throw ShapeMismatch("matching target count is not a perfect square");
    return s;
  }

  void validate() const {
    if (features.rows() != targets.rows()) throw ShapeMismatch("feature and target row counts differ");
    if (targets.rows() == 0 || targets.cols() == 0) throw ShapeMismatch("empty target matrix");
    if (!features.allFinite()) throw DomainError("non-finite feature value");
    if (k < 0) throw DomainError("budget k must be nonnegative");
    if (domain == Domain::Matching) {
      if (targets.cols() != 1) throw ShapeMismatch("matching targets are one column");
      side();
    }
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
      for (Eigen::Index i = 0; i < targets.rows(); ++i) {
        const double t = targets(i, j);
        const bool ok = domain == Domain::Budget ? (t >= 0.0 && t <= kBudgetThetaMax) : (t == 0.0 || t == 1.0);
        if (!ok) {
          throw RangeError(std::string("target out of range for ") + domain_name(domain) + " at (" +
                           std::to_string(i) + ", " + std::to_string(j) + "): " + detail::format_double(t));
        }
      }
    }
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

}  // namespace detail

/// Fixed random rectifier network used to hide theta rows behind features.
struct FeatureNetwork {
  std::vector<Eigen::MatrixXd> weights;  // each out x in

  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const {
    Eigen::MatrixXd a = rows;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (a.cols() != weights[i].cols()) throw ShapeMismatch("feature network input width mismatch");
      a = a * weights[i].transpose();
      if (i + 1 < weights.size()) a = a.cwiseMax(0.0);
    }
    return a;
  }
};

/// Gaussian weights with variance 2 / fan_in; width `width` throughout.
inline FeatureNetwork make_feature_network(std::uint64_t seed, Eigen::Index width, int layers = 5) {
  if (width < 1 || layers < 1) throw DomainError("feature network needs positive width and depth");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(width)));
  FeatureNetwork net;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd w(width, width);
    for (Eigen::Index c = 0; c < width; ++c) {
      for (Eigen::Index r = 0; r < width; ++r) w(r, c) = nd(rng);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

/// theta_uv = Bernoulli(density) * U[0, 0.2]; features y_u = net(theta_u).
/// Without `net`, one is drawn from `seed`; pass a shared network to make a
/// dataset whose instances share the feature map.
inline DatasetInstance gen_budget_allocation(std::uint64_t seed, Eigen::Index channels, Eigen::Index customers,
                                             double density, const FeatureNetwork* net = nullptr) {
  if (channels < 1 || customers < 1) throw DomainError("budget allocation sizes must be positive");
  if (!(density >= 0.0 && density <= 1.0)) throw DomainError("density must lie in [0, 1]");
  FeatureNetwork own;
  if (net == nullptr) {
    own = make_feature_network(detail::derive_seed(seed, 0xfea7), customers);
    net = &own;
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(density);
  std::uniform_real_distribution<double> val(0.0, kBudgetThetaMax);
  DatasetInstance inst;
  inst.domain = Domain::Budget;
  inst.targets = Eigen::MatrixXd::Zero(channels, customers);
  for (Eigen::Index u = 0; u < channels; ++u) {
    for (Eigen::Index v = 0; v < customers; ++v) {
      const bool present = edge(rng);
      const double t = val(rng);
      if (present) inst.targets(u, v) = t;
    }
  }
  inst.features = net->apply(inst.targets);
  return inst;
}

struct MatchingOptions {
  double p_in = 0.5;          // edge probability inside a community
  double p_out = 0.05;        // edge probability across communities
  double feature_noise = 0.5; // std of Gaussian noise on node features
};

/// Community centroids shared by the nodes of a matching dataset.
inline Eigen::MatrixXd make_centroids(std::uint64_t seed, Eigen::Index communities, Eigen::Index feature_dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd c(communities, feature_dim);
  for (Eigen::Index j = 0; j < feature_dim; ++j) {
    for (Eigen::Index i = 0; i < communities; ++i) c(i, j) = nd(rng);
  }
  return c;
}

/// Planted-community bipartite graph with s nodes per side. Node features are
/// the community centroid plus noise; edge (i, j) gets [f_i, f_j].
inline DatasetInstance gen_bipartite_matching(std::uint64_t seed, Eigen::Index side, Eigen::Index feature_dim,
                                              Eigen::Index communities, const MatchingOptions& opts = {},
                                              const Eigen::MatrixXd* centroids = nullptr) {
  if (side < 1 || feature_dim < 1 || communities < 1) throw DomainError("matching sizes must be positive");
  for (double p : {opts.p_in, opts.p_out}) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("edge probabilities must lie in [0, 1]");
  }
  Eigen::MatrixXd own;
  if (centroids == nullptr) {
    own = make_centroids(detail::derive_seed(seed, 0xce17), communities, feature_dim);
    centroids = &own;
  }
  if (centroids->rows() != communities || centroids->cols() != feature_dim) {
    throw ShapeMismatch("centroid matrix does not match communities x feature_dim");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, communities - 1);
  std::normal_distribution<double> noise(0.0, opts.feature_noise);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<Eigen::Index> left(static_cast<std::size_t>(side)), right(static_cast<std::size_t>(side));
  Eigen::MatrixXd fl(side, feature_dim), fr(side, feature_dim);
  for (Eigen::Index i = 0; i < side; ++i) {
    left[static_cast<std::size_t>(i)] = pick(rng);
    for (Eigen::Index d = 0; d < feature_dim; ++d) fl(i, d) = (*centroids)(left[static_cast<std::size_t>(i)], d) + noise(rng);
  }
  for (Eigen::Index j = 0; j < side; ++j) {
    right[static_cast<std::size_t>(j)] = pick(rng);
    for (Eigen::Index d = 0; d < feature_dim; ++d) fr(j, d) = (*centroids)(right[static_cast<std::size_t>(j)], d) + noise(rng);
  }
  DatasetInstance inst;
  inst.domain = Domain::Matching;
  inst.targets.resize(side * side, 1);
  inst.features.resize(side * side, 2 * feature_dim);
  for (Eigen::Index i = 0; i < side; ++i) {
    for (Eigen::Index j = 0; j < side; ++j) {
      const Eigen::Index e = i * side + j;
      const double p = left[static_cast<std::size_t>(i)] == right[static_cast<std::size_t>(j)] ? opts.p_in : opts.p_out;
      inst.targets(e, 0) = coin(rng) < p ? 1.0 : 0.0;
      inst.features.block(e, 0, 1, feature_dim) = fl.row(i);
      inst.features.block(e, feature_dim, 1, feature_dim) = fr.row(j);
    }
  }
  return inst;
}

struct RecommendationOptions {
  double membership = 0.1;   // probability an item carries a topic
  double rating_noise = 0.1; // std of Gaussian rating noise
  double missing = 0.2;      // probability a rating is zeroed
};

/// Binary item-topic matrix. User u cares about topic u mod topics; their
/// rating of an item is its membership in that topic plus noise, zeroed at
/// random.
inline DatasetInstance gen_diverse_recommendation(std::uint64_t seed, Eigen::Index items, Eigen::Index topics,
                                                  Eigen::Index users, const RecommendationOptions& opts = {}) {
  if (items < 1 || topics < 1 || users < 1) throw DomainError("recommendation sizes must be positive");
  if (!(opts.membership >= 0.0 && opts.membership <= 1.0) || !(opts.missing >= 0.0 && opts.missing <= 1.0) ||
      !(opts.rating_noise >= 0.0)) {
    throw DomainError("recommendation options out of range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  DatasetInstance inst;
  inst.domain = Domain::Recommendation;
  inst.targets.resize(items, topics);
  for (Eigen::Index i = 0; i < items; ++i) {
    for (Eigen::Index t = 0; t < topics; ++t) inst.targets(i, t) = coin(rng) < opts.membership ? 1.0 : 0.0;
  }
  inst.features.resize(items, users);
  for (Eigen::Index i = 0; i < items; ++i) {
    for (Eigen::Index u = 0; u < users; ++u) {
      const double r = inst.targets(i, u % topics) + opts.rating_noise * noise(rng);
      inst.features(i, u) = coin(rng) < opts.missing ? 0.0 : r;
    }
  }
  return inst;
}

/// Matching as a box-constrained LP over x_ij (row-major), with degree rows
/// sum_j x_ij <= 1 (i = 0..s-1), then sum_i x_ij <= 1, then -x <= 0, x <= 1.
inline QpProblem matching_to_qp(const Eigen::MatrixXd& weights, double gamma) {
  if (weights.rows() != weights.cols() || weights.rows() == 0) throw ShapeMismatch("matching weights must be s x s");
  const Eigen::Index s = weights.rows();
  const Eigen::Index n = s * s;
  QpProblem prob;
  prob.theta.resize(n);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) prob.theta(i * s + j) = weights(i, j);
  }
  prob.A.resize(0, n);
  prob.b.resize(0);
  prob.G = Eigen::MatrixXd::Zero(2 * s + 2 * n, n);
  prob.h.resize(2 * s + 2 * n);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      prob.G(i, i * s + j) = 1.0;
      prob.G(s + j, i * s + j) = 1.0;
    }
  }
  prob.h.head(2 * s).setOnes();
  Eigen::MatrixXd box;
  Eigen::VectorXd box_h;
  unit_box(n, box, box_h);
  prob.G.bottomRows(2 * n) = box;
  prob.h.tail(2 * n) = box_h;
  prob.gamma = gamma;
  return prob;
}

/// Row-major s*s column of edge values as an s x s matrix.
inline Eigen::MatrixXd edges_to_square(const Eigen::VectorXd& edges) {
  const auto s = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(edges.size()))));
  if (s * s != edges.size()) throw ShapeMismatch("edge count is not a perfect square");
  Eigen::MatrixXd m(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) m(i, j) = edges(i * s + j);
  }
  return m;
}

/// Coverage view of a budget or recommendation instance: unit item weights.
inline CoverageInstance coverage_of(const Eigen::MatrixXd& theta, int k) {
  CoverageInstance c;
  c.theta = theta;
  c.w = Eigen::VectorXd::Ones(theta.cols());
  c.k = k;
  return c;
}

/// Sizes and knobs for a whole dataset; defaults are the desk-scale benchmark.
struct DatasetConfig {
  Domain domain = Domain::Budget;
  int k = 5;
  // budget
  Eigen::Index channels = 20;
  Eigen::Index customers = 50;
  double density = 0.05;
  // matching
  Eigen::Index side = 10;
  Eigen::Index feature_dim = 8;
  Eigen::Index communities = 3;
  MatchingOptions matching;
  // recommendation
  Eigen::Index items = 30;
  Eigen::Index topics = 20;
  Eigen::Index users = 40;
  RecommendationOptions recommendation;
};

/// `count` instances sharing the dataset-level structure (feature network or
/// centroids) drawn from `seed`; instance i uses a seed derived from (seed, i).
inline std::vector<DatasetInstance> generate_dataset(const DatasetConfig& cfg, std::uint64_t seed, std::size_t count) {
  std::vector<DatasetInstance> out;
  out.reserve(count);
  FeatureNetwork net;
  Eigen::MatrixXd centroids;
  if (cfg.domain == Domain::Budget) {
    net = make_feature_network(detail::derive_seed(seed, 0xfea7), cfg.customers);
  } else if (cfg.domain == Domain::Matching) {
    centroids = make_centroids(detail::derive_seed(seed, 0xce17), cfg.communities, cfg.feature_dim);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = detail::derive_seed(seed, i + 1);
    DatasetInstance inst;
    switch (cfg.domain) {
      case Domain::Budget:
        inst = gen_budget_allocation(s, cfg.channels, cfg.customers, cfg.density, &net);
        break;
      case Domain::Matching:
        inst = gen_bipartite_matching(s, cfg.side, cfg.feature_dim, cfg.communities, cfg.matching, &centroids);
        break;
      case Domain::Recommendation:
        inst = gen_diverse_recommendation(s, cfg.items, cfg.topics, cfg.users, cfg.recommendation);
        break;
    }
    inst.k = cfg.domain == Domain::Matching ? 0 : cfg.k;
    out.push_back(std::move(inst));
  }
  return out;
}

/// Text format: "<domain> <rows> <cols> <k>", then `rows` target lines of
/// `cols` values, then `rows` feature lines of equal width.
inline void write_instance(std::ostream& os, const DatasetInstance& inst) {
  os << domain_name(inst.domain) << ' ' << inst.targets.rows() << ' ' << inst.targets.cols() << ' ' << inst.k
     << '\n';
  auto block = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) os << ' ';
        os << detail::format_double(m(i, j));
      }
      os << '\n';
    }
  };
  block(inst.targets);
  block(inst.features);
}

/// Parses an instance; `expect` rejects files tagged with another domain.
inline DatasetInstance read_instance(std::istream& is, std::optional<Domain> expect = std::nullopt) {
  detail::LineReader in(is);
  const auto head = in.tokens();
  if (head.size() != 4) throw ParseError("expected '<domain> <rows> <cols> <k>'", in.line());
  const auto domain = parse_domain(head[0]);
  if (!domain) throw ParseError("unknown domain '" + head[0] + "'", in.line());
  if (expect && *expect != *domain) {
    throw ParseError(std::string("file holds a ") + head[0] + " instance, expected " + domain_name(*expect),
                     in.line());
  }
  DatasetInstance inst;
  inst.domain = *domain;
  const long rows = in.to_count(head[1]);
  const long cols = in.to_count(head[2]);
  inst.k = static_cast<int>(in.to_count(head[3]));
  if (rows == 0 || cols == 0) throw ParseError("empty target block", in.line());
  inst.targets.resize(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const auto vals = in.numbers(static_cast<std::size_t>(cols));
    for (long j = 0; j < cols; ++j) inst.targets(i, j) = vals[static_cast<std::size_t>(j)];
  }
  for (long i = 0; i < rows; ++i) {
    const auto toks = in.tokens();
    if (i == 0) inst.features.resize(rows, static_cast<Eigen::Index>(toks.size()));
    if (static_cast<Eigen::Index>(toks.size()) != inst.features.cols()) {
      throw ParseError("feature rows differ in width", in.line());
    }
    for (std::size_t j = 0; j < toks.size(); ++j) {
      inst.features(i, static_cast<Eigen::Index>(j)) = in.to_double(toks[j]);
    }
  }
  try {
    inst.validate();
  } catch (const RangeError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), in.line());
  }
  return inst;
}

inline void save_instance(const std::string& path, const DatasetInstance& inst) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_instance(os, inst);
  if (!os) throw IoError("failed writing '" + path + "'");
}

inline DatasetInstance load_instance(const std::string& path, std::optional<Domain> expect = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_instance(is, expect);
}

}  // namespace dfl

#endif  // DFL_DOMAINS_HPP_
