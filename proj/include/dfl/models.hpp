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

#ifndef DFL_MODELS_HPP_
#define DFL_MODELS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/text_io.hpp"

namespace dfl {

enum class OutputKind { Identity, Sigmoid, ScaledSigmoid };

/// Map from raw network outputs to the parameter space.
struct OutputActivation {
  OutputKind kind = OutputKind::Identity;
  double scale = 1.0;  // upper end of the range for ScaledSigmoid

  static OutputActivation identity() { return {OutputKind::Identity, 1.0}; }
  static OutputActivation sigmoid() { return {OutputKind::Sigmoid, 1.0}; }
  static OutputActivation scaled_sigmoid(double c) {
    if (!(c > 0.0)) throw DomainError("scaled sigmoid needs a positive scale");
    return {OutputKind::ScaledSigmoid, c};
  }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Fully connected network; ReLU between layers, `output` after the last.
struct Mlp {
  std::vector<DenseLayer> layers;
  OutputActivation output;

  Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Eigen::Index output_size() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

  Eigen::Index parameter_count() const {
    Eigen::Index c = 0;
    for (const auto& l : layers) c += l.weight.size() + l.bias.size();
    return c;
  }

  void validate() const {
    if (layers.empty()) throw ShapeMismatch("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.weight.rows()) throw ShapeMismatch("bias length differs from layer width");
      if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows()) {
        throw ShapeMismatch("consecutive layer sizes do not chain");
      }
      if (!l.weight.allFinite() || !l.bias.allFinite()) throw DomainError("non-finite network weight");
    }
  }
};

/// He-uniform initialization: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
/// `sizes` lists input width, hidden widths, output width.
inline Mlp make_mlp(const std::vector<Eigen::Index>& sizes, OutputActivation output, std::uint64_t seed) {
  if (sizes.size() < 2) throw ShapeMismatch("need at least input and output sizes");
  std::mt19937_64 rng(seed);
  Mlp net;
  net.output = output;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i + 1] < 1) throw ShapeMismatch("layer sizes must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[i]));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer l;
    l.weight.resize(sizes[i + 1], sizes[i]);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = u(rng);
    }
    l.bias = Eigen::VectorXd::Zero(sizes[i + 1]);
    net.layers.push_back(std::move(l));
  }
  return net;
}

/// Per-layer inputs and pre-activations from one forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // batch x in, one per layer
  std::vector<Eigen::MatrixXd> pre;     // batch x out, one per layer
  Eigen::MatrixXd output;               // batch x out after the output map
};

namespace detail {

inline double logistic(double z) {
  // Clamped so outputs stay strictly inside (0, 1).
  constexpr double lo = 1e-12;
  const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, lo, 1.0 - lo);
}

}  // namespace detail

/// Rows of `features` are samples. Returns predictions (batch x out).
inline Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& features, ForwardCache* cache = nullptr) {
  if (net.layers.empty() || features.cols() != net.input_size()) {
    throw ShapeMismatch("feature width does not match network input");
  }
  Eigen::MatrixXd a = features;
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    Eigen::MatrixXd z = a * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (cache != nullptr) {
      cache->inputs.push_back(a);
      cache->pre.push_back(z);
    }
    a = (i + 1 < net.layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  switch (net.output.kind) {
    case OutputKind::Identity:
      break;
    case OutputKind::Sigmoid:
      a = a.unaryExpr([](double z) { return detail::logistic(z); });
      break;
    case OutputKind::ScaledSigmoid: {
      const double c = net.output.scale;
      a = a.unaryExpr([c](double z) { return c * detail::logistic(z); });
      break;
    }
  }
  if (cache != nullptr) cache->output = a;
  return a;
}

/// Parameter gradients, laid out like Mlp::layers.
using MlpGradients = std::vector<DenseLayer>;

inline MlpGradients zero_gradients(const Mlp& net) {
  MlpGradients g;
  for (const auto& l : net.layers) {
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

/// Back-propagates dLoss/dPrediction (batch x out) through the cached pass.
inline MlpGradients mlp_backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream) {
  if (cache.pre.size() != net.layers.size() || upstream.rows() != cache.output.rows() ||
      upstream.cols() != cache.output.cols()) {
    throw ShapeMismatch("cache or upstream gradient does not match the network");
  }
  Eigen::MatrixXd delta = upstream;
  switch (net.output.kind) {
    case OutputKind::Identity:
      break;
    case OutputKind::Sigmoid:
    case OutputKind::ScaledSigmoid: {
      const double c = net.output.kind == OutputKind::Sigmoid ? 1.0 : net.output.scale;
      const Eigen::MatrixXd& z = cache.pre.back();
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          const double s = detail::logistic(z(i, j));
          delta(i, j) *= c * s * (1.0 - s);
        }
      }
      break;
    }
  }
  MlpGradients g(net.layers.size());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    g[li].weight = delta.transpose() * cache.inputs[li];
    g[li].bias = delta.colwise().sum().transpose();
    if (li == 0) break;
    delta = (delta * net.layers[li].weight).cwiseProduct(
        cache.pre[li - 1].unaryExpr([](double z) { return z > 0.0 ? 1.0 : 0.0; }));
  }
  return g;
}

inline Eigen::VectorXd flatten(const std::vector<DenseLayer>& layers) {
  Eigen::Index total = 0;
  for (const auto& l : layers) total += l.weight.size() + l.bias.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    out.segment(at, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& flat, std::vector<DenseLayer>& layers) {
  Eigen::Index at = 0;
  for (auto& l : layers) {
    if (at + l.weight.size() + l.bias.size() > flat.size()) throw ShapeMismatch("flat parameter vector too short");
    Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
  if (at != flat.size()) throw ShapeMismatch("flat parameter vector too long");
}

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index n, double lr = 1e-3)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(AdamState& st, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads) {
  if (params.size() != grads.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
    throw ShapeMismatch("Adam state, parameters and gradients differ in length");
  }
  ++st.step;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grads;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  params.array() -= st.learning_rate * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.epsilon);
}

inline void adam_step(AdamState& st, Mlp& net, const MlpGradients& grads) {
  Eigen::VectorXd p = flatten(net.layers);
  adam_step(st, p, flatten(grads));
  unflatten(p, net.layers);
}

enum class LossKind { MSE, CrossEntropy };

struct LossValue {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // same shape as the prediction
};

/// Mean loss over all entries and its gradient with respect to `pred`.
inline LossValue two_stage_loss(LossKind kind, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeMismatch("prediction and target shapes differ");
  }
  if (pred.size() == 0) throw ShapeMismatch("empty prediction");
  if (!pred.allFinite() || !target.allFinite()) throw DomainError("non-finite loss input");
  const double n = static_cast<double>(pred.size());
  LossValue out;
  if (kind == LossKind::MSE) {
    const Eigen::MatrixXd diff = pred - target;
    out.loss = diff.squaredNorm() / n;
    out.grad = 2.0 * diff / n;
    return out;
  }
  if (pred.minCoeff() <= 0.0 || pred.maxCoeff() >= 1.0) {
    throw DomainError("cross-entropy predictions must lie in (0, 1)");
  }
  if (target.minCoeff() < 0.0 || target.maxCoeff() > 1.0) {
    throw DomainError("cross-entropy targets must lie in [0, 1]");
  }
  out.grad.resize(pred.rows(), pred.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double p = pred(i, j), t = target(i, j);
      total -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
      out.grad(i, j) = (-t / p + (1.0 - t) / (1.0 - p)) / n;
    }
  }
  out.loss = std::max(0.0, total / n);
  return out;
}

inline const char* output_kind_name(OutputKind k) {
  switch (k) {
    case OutputKind::Identity:
      return "identity";
    case OutputKind::Sigmoid:
      return "sigmoid";
    case OutputKind::ScaledSigmoid:
      return "scaled_sigmoid";
  }
  return "identity";
}

/// Checkpoint: "mlp <layers> <activation> <scale>", then for each layer
/// "<out> <in>", <out> weight rows and one bias row.
inline void write_mlp(std::ostream& os, const Mlp& net) {
  net.validate();
  os << "mlp " << net.layers.size() << ' ' << output_kind_name(net.output.kind) << ' '
     << detail::format_double(net.output.scale) << '\n';
  for (const auto& l : net.layers) {
    os << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        if (c) os << ' ';
        os << detail::format_double(l.weight(r, c));
      }
      os << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      if (r) os << ' ';
      os << detail::format_double(l.bias(r));
    }
    os << '\n';
  }
}

inline Mlp read_mlp(std::istream& is) {
  detail::LineReader in(is);
  const auto head = in.tokens();
  if (head.size() != 4 || head[0] != "mlp") throw ParseError("expected 'mlp <layers> <activation> <scale>'", in.line());
  Mlp net;
  const long count = in.to_count(head[1]);
  if (head[2] == "identity") {
    net.output = OutputActivation::identity();
  } else if (head[2] == "sigmoid") {
    net.output = OutputActivation::sigmoid();
  } else if (head[2] == "scaled_sigmoid") {
    net.output = {OutputKind::ScaledSigmoid, in.to_double(head[3])};
    if (!(net.output.scale > 0.0)) throw ParseError("scale must be positive", in.line());
  } else {
    throw ParseError("unknown output activation '" + head[2] + "'", in.line());
  }
  for (long li = 0; li < count; ++li) {
    const auto dims = in.tokens();
    if (dims.size() != 2) throw ParseError("expected '<out> <in>'", in.line());
    const long rows = in.to_count(dims[0]);
    const long cols = in.to_count(dims[1]);
    DenseLayer l;
    l.weight.resize(rows, cols);
    for (long r = 0; r < rows; ++r) {
      const auto vals = in.numbers(static_cast<std::size_t>(cols));
      for (long c = 0; c < cols; ++c) l.weight(r, c) = vals[static_cast<std::size_t>(c)];
    }
    const auto bias = in.numbers(static_cast<std::size_t>(rows));
    l.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
    net.layers.push_back(std::move(l));
  }
  try {
    net.validate();
  } catch (const Error& e) {
    throw ParseError(e.what(), in.line());
  }
  return net;
}

}  // namespace dfl

#endif  // DFL_MODELS_HPP_
