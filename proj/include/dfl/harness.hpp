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

#ifndef DFL_HARNESS_HPP_
#define DFL_HARNESS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dfl/domains.hpp"
#include "dfl/errors.hpp"
#include "dfl/metrics.hpp"
#include "dfl/models.hpp"
#include "dfl/qp_layer.hpp"
#include "dfl/submod_layer.hpp"
#include "dfl/text_io.hpp"

namespace dfl {

enum class Method { Decision, TwoStage, Random };

inline std::string method_label(Method m, int depth) {
  switch (m) {
    case Method::Decision:
      return "NN" + std::to_string(depth) + "-Decision";
    case Method::TwoStage:
      return "NN" + std::to_string(depth) + "-2Stage";
    case Method::Random:
      return "Random";
  }
  return "Random";
}

inline std::optional<Method> parse_method(const std::string& s) {
  if (s == "decision") return Method::Decision;
  if (s == "two-stage" || s == "2stage") return Method::TwoStage;
  if (s == "random") return Method::Random;
  return std::nullopt;
}

struct ExperimentConfig {
  DatasetConfig data;
  double gamma = 0.1;          // quadratic regularizer of the matching layer
  int depth = 1;               // 1: linear model; 2: one hidden layer
  Eigen::Index hidden = 200;
  std::vector<Method> methods{Method::Decision, Method::TwoStage, Method::Random};
  int epochs = 30;
  double learning_rate = 1e-3;
  std::size_t instances = 0;   // 0 picks the domain default
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  int patience = 5;            // epochs without validation gain before stopping
  bool standardize = true;     // z-score features on the training instances
  int splits = 30;
  std::uint64_t seed = 0;
  std::string out;             // detail CSV path; empty writes nothing
  SgaOptions sga;
  int bootstrap_draws = 10000;
  unsigned threads = 0;        // 0 uses the hardware concurrency

  std::size_t instance_count() const {
    if (instances > 0) return instances;
    return data.domain == Domain::Matching ? 30 : 40;
  }

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("validation fraction must lie in [0, 1)");
    }
    if (splits < 1) throw ConfigError("splits must be at least 1");
    if (data.k < 1) throw ConfigError("k must be at least 1");
    if (depth < 1) throw ConfigError("depth must be at least 1");
    if (depth > 1 && hidden < 1) throw ConfigError("hidden size must be positive");
    if (epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (methods.empty()) throw ConfigError("no methods requested");
    if (bootstrap_draws < 1) throw ConfigError("bootstrap draws must be positive");
    const std::size_t n = instance_count();
    const auto test = n - static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (test < 1 || test >= n) throw ConfigError("split leaves an empty train or test set");
    if (data.domain != Domain::Matching) {
      const Eigen::Index rows = data.domain == Domain::Budget ? data.channels : data.items;
      if (data.k > rows) throw ConfigError("k exceeds the number of selectable rows");
    }
  }
};

namespace detail {

inline OutputActivation output_for(Domain d) {
  return d == Domain::Budget ? OutputActivation::scaled_sigmoid(kBudgetThetaMax) : OutputActivation::sigmoid();
}

inline LossKind two_stage_kind(Domain d) { return d == Domain::Budget ? LossKind::MSE : LossKind::CrossEntropy; }

/// Column means and standard deviations over the rows of all instances.
struct Scaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& f) const {
    return ((f.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
  }
};

inline Scaler fit_scaler(const std::vector<const DatasetInstance*>& data, bool enabled) {
  const Eigen::Index d = data.front()->features.cols();
  Scaler s{Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Ones(d)};
  if (!enabled) return s;
  double rows = 0.0;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d), sq = Eigen::RowVectorXd::Zero(d);
  for (const auto* inst : data) {
    sum += inst->features.colwise().sum();
    sq += inst->features.array().square().matrix().colwise().sum();
    rows += static_cast<double>(inst->features.rows());
  }
  s.mean = sum / rows;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = std::max(0.0, sq(j) / rows - s.mean(j) * s.mean(j));
    s.inv_std(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

/// Absorbs the scaler into the first layer so the network takes raw features.
inline void fold_scaler(Mlp& net, const Scaler& s) {
  DenseLayer& first = net.layers.front();
  first.weight = first.weight * s.inv_std.asDiagonal();
  first.bias -= first.weight * s.mean.transpose();
}

}  // namespace detail

inline Mlp make_model(const ExperimentConfig& cfg, const DatasetInstance& sample, std::uint64_t seed) {
  std::vector<Eigen::Index> sizes{sample.features.cols()};
  for (int l = 1; l < cfg.depth; ++l) sizes.push_back(cfg.hidden);
  sizes.push_back(sample.targets.cols());
  return make_mlp(sizes, detail::output_for(sample.domain), seed);
}

/// Test-time decision from predicted parameters: projected ascent plus pipage
/// rounding for coverage domains, the exact matching for the matching domain.
inline Eigen::VectorXd decide(const DatasetInstance& inst, const Eigen::MatrixXd& theta_hat, const SgaOptions& sga,
                              std::uint64_t seed) {
  if (inst.domain == Domain::Matching) {
    const QpProblem p = matching_to_qp(edges_to_square(theta_hat.col(0)), 0.0);
    return solve_integral(p, IntegralStructure::BipartiteMatching);
  }
  const CoverageInstance c = coverage_of(theta_hat, inst.k);
  const SgaResult r = sga_maximize(c, sga, seed);
  return pipage_round(r.x, c, detail::derive_seed(seed, 0x9a9e));
}

/// Uniformly random feasible decision: k random rows, or a random perfect
/// matching.
inline Eigen::VectorXd random_decision(const DatasetInstance& inst, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (inst.domain == Domain::Matching) {
    const Eigen::Index s = inst.side();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(s));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(s * s);
    for (Eigen::Index i = 0; i < s; ++i) x(i * s + perm[static_cast<std::size_t>(i)]) = 1.0;
    return x;
  }
  const Eigen::Index n = inst.targets.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < std::min<Eigen::Index>(inst.k, n); ++i) x(idx[static_cast<std::size_t>(i)]) = 1.0;
  return x;
}

struct TrainingReport {
  int epochs_run = 0;
  int best_epoch = 0;  // 0 means the initial weights were kept
  double best_validation = -std::numeric_limits<double>::infinity();
};

namespace detail {

/// Training-loss gradient for one instance, written into `grads`. The
/// decision-focused loss is minus the true objective at the relaxed decision
/// for the predicted parameters; the two-stage loss is MSE or cross-entropy.
inline void instance_gradient(const ExperimentConfig& cfg, Method method, const Mlp& net,
                              const Eigen::MatrixXd& features, const DatasetInstance& inst, std::uint64_t seed,
                              MlpGradients& grads) {
  ForwardCache cache;
  const Eigen::MatrixXd pred = mlp_forward(net, features, &cache);
  Eigen::MatrixXd upstream;
  if (method == Method::TwoStage) {
    upstream = two_stage_loss(two_stage_kind(inst.domain), pred, inst.targets).grad;
  } else if (inst.domain == Domain::Matching) {
    const QpProblem p = matching_to_qp(edges_to_square(pred.col(0)), cfg.gamma);
    const LayerSolution sol = solve_qp(p);
    upstream = -backward_qp(p, sol, inst.targets.col(0));
  } else {
    const CoverageInstance c = coverage_of(pred, inst.k);
    const SgaResult r = sga_maximize(c, cfg.sga, seed);
    DualRecoveryOptions lenient;
    lenient.lenient = true;
    const CardinalityDuals duals = recover_duals(r.x, extension_grad_x(r.x, c), inst.k, lenient);
    const Eigen::VectorXd df_dx = extension_grad_x(r.x, coverage_of(inst.targets, inst.k));
    upstream = -backward_submod(c, r.x, duals, df_dx);
  }
  grads = mlp_backward(net, cache, upstream);
}

/// Relaxed decision objective f(x(theta_hat), theta_true): the regularized
/// matching solution, or the projected-ascent point for coverage domains.
inline double relaxed_objective(const ExperimentConfig& cfg, const Eigen::MatrixXd& pred,
                                const DatasetInstance& inst, std::uint64_t seed) {
  if (inst.domain == Domain::Matching) {
    const QpProblem p = matching_to_qp(edges_to_square(pred.col(0)), cfg.gamma);
    return inst.targets.col(0).dot(solve_qp(p).x);
  }
  const SgaResult r = sga_maximize(coverage_of(pred, inst.k), cfg.sga, seed);
  return extension_value(r.x, coverage_of(inst.targets, inst.k));
}

/// Held-out value of each method's own training loss, negated so that higher
/// is better.
inline double validation_score(const ExperimentConfig& cfg, Method method, const Mlp& net,
                               const std::vector<Eigen::MatrixXd>& features,
                               const std::vector<const DatasetInstance*>& val, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const Eigen::MatrixXd pred = mlp_forward(net, features[i]);
    if (method == Method::Decision) {
      total += relaxed_objective(cfg, pred, *val[i], derive_seed(seed, i));
    } else {
      total -= two_stage_loss(two_stage_kind(val[i]->domain), pred, val[i]->targets).loss;
    }
  }
  return total / static_cast<double>(val.size());
}

}  // namespace detail

/// Trains a fresh model on `train`, holding out the last `validation` of them
/// for early stopping. One instance per Adam step. The returned network takes
/// raw features.
inline Mlp train_model(const ExperimentConfig& cfg, Method method, const std::vector<const DatasetInstance*>& data,
                       std::size_t validation, std::uint64_t seed, TrainingReport* report = nullptr) {
  if (method == Method::Random) throw ConfigError("the random baseline has no model");
  if (data.empty() || validation >= data.size()) throw ConfigError("no training instances");
  const std::vector<const DatasetInstance*> train(data.begin(), data.end() - static_cast<std::ptrdiff_t>(validation));
  const std::vector<const DatasetInstance*> val(data.end() - static_cast<std::ptrdiff_t>(validation), data.end());
  const detail::Scaler scaler = detail::fit_scaler(train, cfg.standardize);
  std::vector<Eigen::MatrixXd> train_x, val_x;
  for (const auto* inst : train) train_x.push_back(scaler.apply(inst->features));
  for (const auto* inst : val) val_x.push_back(scaler.apply(inst->features));

  Mlp net = make_model(cfg, *train.front(), detail::derive_seed(seed, 1));
  AdamState adam(net.parameter_count(), cfg.learning_rate);
  TrainingReport rep;
  Mlp best = net;
  const std::uint64_t val_seed = detail::derive_seed(seed, 2);
  if (!val.empty()) rep.best_validation = detail::validation_score(cfg, method, net, val_x, val, val_seed);

  std::mt19937_64 rng(detail::derive_seed(seed, 3));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  int stale = 0;
  MlpGradients grads;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const std::size_t i : order) {
      detail::instance_gradient(cfg, method, net, train_x[i], *train[i], detail::derive_seed(seed, 1000 + step++),
                                grads);
      adam_step(adam, net, grads);
    }
    rep.epochs_run = epoch;
    if (val.empty()) {
      best = net;
      rep.best_epoch = epoch;
      continue;
    }
    const double score = detail::validation_score(cfg, method, net, val_x, val, val_seed);
    if (score > rep.best_validation) {
      rep.best_validation = score;
      rep.best_epoch = epoch;
      best = net;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  detail::fold_scaler(best, scaler);
  if (report != nullptr) *report = rep;
  return best;
}

/// Decision quality per instance plus pooled accuracy measures. A null model
/// evaluates the random baseline and leaves the accuracy measures NaN.
struct Evaluation {
  std::vector<double> quality;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double ce = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();

  double mean_quality() const {
    return quality.empty() ? 0.0 : std::accumulate(quality.begin(), quality.end(), 0.0) / static_cast<double>(quality.size());
  }
};

inline Evaluation evaluate_model(const Mlp* net, const std::vector<const DatasetInstance*>& data, const SgaOptions& sga,
                                 std::uint64_t seed) {
  Evaluation ev;
  if (data.empty()) return ev;
  std::vector<double> pred_all, true_all;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const DatasetInstance& inst = *data[i];
    const std::uint64_t s = detail::derive_seed(seed, i);
    if (net == nullptr) {
      ev.quality.push_back(decision_quality(inst.domain, random_decision(inst, s), inst.targets, inst.k));
      continue;
    }
    const Eigen::MatrixXd pred = mlp_forward(*net, inst.features);
    ev.quality.push_back(decision_quality(inst.domain, decide(inst, pred, sga, s), inst.targets, inst.k));
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        pred_all.push_back(pred(r, c));
        true_all.push_back(inst.targets(r, c));
      }
    }
  }
  if (net == nullptr) return ev;
  const Eigen::Map<const Eigen::VectorXd> p(pred_all.data(), static_cast<Eigen::Index>(pred_all.size()));
  const Eigen::Map<const Eigen::VectorXd> t(true_all.data(), static_cast<Eigen::Index>(true_all.size()));
  ev.mse = mse(p, t);
  if (data.front()->domain != Domain::Budget) {
    ev.ce = cross_entropy(p, t);
    try {
      ev.auc = auc(p, t);
    } catch (const DegenerateLabels&) {
      // left NaN: no positives or no negatives among the test entries
    }
  }
  return ev;
}

struct RunResult {
  std::string method;
  int split = 0;
  std::uint64_t seed = 0;
  int k = 0;
  double gamma = 0.0;
  double decision_quality = 0.0;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double ce = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryRow {
  std::string method;
  std::size_t splits = 0;
  ConfidenceInterval quality;
  std::optional<ConfidenceInterval> mse, ce, auc;
};

struct ExperimentResult {
  std::vector<RunResult> runs;      // split-major, methods in config order
  std::vector<SummaryRow> summary;  // one per method
};

inline std::string summary_path(const std::string& detail_path) {
  std::filesystem::path p(detail_path);
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + "_summary" + ext)).string();
}

namespace detail {

inline std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

inline void check_output_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

inline std::ofstream open_output(const std::string& path) {
  check_output_dir(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

/// All instances of one split, partitioned by a permutation drawn from the
/// split seed: first the training part (validation at its end), then test.
struct SplitPlan {
  std::vector<const DatasetInstance*> train;
  std::vector<const DatasetInstance*> test;
  std::size_t validation = 0;
};

inline SplitPlan plan_split(const ExperimentConfig& cfg, const std::vector<DatasetInstance>& data,
                            std::uint64_t split_seed) {
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(split_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(data.size())));
  SplitPlan plan;
  for (std::size_t i = 0; i < perm.size(); ++i) (i < n_train ? plan.train : plan.test).push_back(&data[perm[i]]);
  plan.validation = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n_train)));
  if (plan.validation >= n_train) plan.validation = 0;
  return plan;
}

inline std::vector<RunResult> run_split(const ExperimentConfig& cfg, const std::vector<DatasetInstance>& data,
                                        int split) {
  const std::uint64_t split_seed = cfg.seed ^ static_cast<std::uint64_t>(split);
  const SplitPlan plan = plan_split(cfg, data, split_seed);
  const std::uint64_t eval_seed = derive_seed(split_seed, 77);
  std::vector<RunResult> rows;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method m = cfg.methods[mi];
    Evaluation ev;
    if (m == Method::Random) {
      ev = evaluate_model(nullptr, plan.test, cfg.sga, eval_seed);
    } else {
      const Mlp net = train_model(cfg, m, plan.train, plan.validation, derive_seed(split_seed, 100 + mi));
      ev = evaluate_model(&net, plan.test, cfg.sga, eval_seed);
    }
    RunResult r;
    r.method = method_label(m, cfg.depth);
    r.split = split;
    r.seed = split_seed;
    r.k = cfg.data.domain == Domain::Matching ? 0 : cfg.data.k;
    r.gamma = cfg.gamma;
    r.decision_quality = ev.mean_quality();
    r.mse = ev.mse;
    r.ce = ev.ce;
    r.auc = ev.auc;
    rows.push_back(r);
  }
  return rows;
}

inline std::optional<ConfidenceInterval> column_ci(const std::vector<double>& v, const ExperimentConfig& cfg) {
  std::vector<double> kept;
  for (const double x : v) {
    if (!std::isnan(x)) kept.push_back(x);
  }
  if (kept.empty()) return std::nullopt;
  return bootstrap_ci(kept, cfg.bootstrap_draws, 0.95, cfg.seed);
}

}  // namespace detail

inline void write_detail_csv(std::ostream& os, const std::vector<RunResult>& runs, Domain domain) {
  os << "method,split,seed,k,gamma,decision_quality,mse,ce,auc\n";
  for (const auto& r : runs) {
    os << r.method << ',' << r.split << ',' << r.seed << ',' << (domain == Domain::Matching ? "" : std::to_string(r.k))
       << ',' << detail::format_double(r.gamma) << ',' << detail::format_double(r.decision_quality) << ','
       << detail::cell(r.mse) << ',' << detail::cell(r.ce) << ',' << detail::cell(r.auc) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "method,splits,decision_quality_mean,decision_quality_low,decision_quality_high,mse_mean,mse_low,mse_high,"
        "ce_mean,ce_low,ce_high,auc_mean,auc_low,auc_high\n";
  auto triple = [&](const std::optional<ConfidenceInterval>& ci) {
    if (!ci) return std::string(",,");
    return detail::format_double(ci->mean) + ',' + detail::format_double(ci->low) + ',' +
           detail::format_double(ci->high);
  };
  for (const auto& r : rows) {
    os << r.method << ',' << r.splits << ',' << triple(r.quality) << ',' << triple(r.mse) << ',' << triple(r.ce)
       << ',' << triple(r.auc) << '\n';
  }
}

/// Full protocol: one dataset from the master seed, `splits` random
/// train/test partitions run concurrently, results merged in split order.
/// Writes the detail CSV to cfg.out and the summary next to it.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.out.empty()) detail::check_output_dir(cfg.out);
  DatasetConfig dc = cfg.data;
  const std::vector<DatasetInstance> data = generate_dataset(dc, cfg.seed, cfg.instance_count());

  const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
  const unsigned workers = cfg.threads == 0 ? hw : cfg.threads;
  std::vector<std::vector<RunResult>> per_split(static_cast<std::size_t>(cfg.splits));
  for (int start = 0; start < cfg.splits; start += static_cast<int>(workers)) {
    std::vector<std::future<std::vector<RunResult>>> jobs;
    const int end = std::min(cfg.splits, start + static_cast<int>(workers));
    for (int s = start; s < end; ++s) {
      jobs.push_back(std::async(std::launch::async, [&cfg, &data, s] { return detail::run_split(cfg, data, s); }));
    }
    for (int s = start; s < end; ++s) {
      try {
        per_split[static_cast<std::size_t>(s)] = jobs[static_cast<std::size_t>(s - start)].get();
      } catch (const Error& e) {
        throw Error("split " + std::to_string(s) + ": " + e.what());
      }
    }
  }

  ExperimentResult res;
  for (auto& rows : per_split) res.runs.insert(res.runs.end(), rows.begin(), rows.end());
  for (const Method m : cfg.methods) {
    SummaryRow row;
    row.method = method_label(m, cfg.depth);
    std::vector<double> q, e1, e2, e3;
    for (const auto& r : res.runs) {
      if (r.method != row.method) continue;
      q.push_back(r.decision_quality);
      e1.push_back(r.mse);
      e2.push_back(r.ce);
      e3.push_back(r.auc);
    }
    row.splits = q.size();
    row.quality = bootstrap_ci(q, cfg.bootstrap_draws, 0.95, cfg.seed);
    row.mse = detail::column_ci(e1, cfg);
    row.ce = detail::column_ci(e2, cfg);
    row.auc = detail::column_ci(e3, cfg);
    res.summary.push_back(row);
  }

  if (!cfg.out.empty()) {
    {
      std::ofstream os = detail::open_output(cfg.out);
      write_detail_csv(os, res.runs, cfg.data.domain);
      if (!os) throw IoError("failed writing '" + cfg.out + "'");
    }
    const std::string sp = summary_path(cfg.out);
    std::ofstream os = detail::open_output(sp);
    write_summary_csv(os, res.summary);
    if (!os) throw IoError("failed writing '" + sp + "'");
  }
  return res;
}

struct ExportResult {
  std::string theta_path;
  std::string outweight_path;
  double correlation = 0.0;  // Pearson r between predicted and true out-weights
};

/// Writes <prefix>_theta.csv (predicted parameter matrix; s x s for
/// matching) and <prefix>_outweight.csv (row, predicted, true row sums).
inline ExportResult export_predictions(const Mlp& net, const DatasetInstance& inst, const std::string& prefix) {
  Eigen::MatrixXd pred = mlp_forward(net, inst.features);
  Eigen::MatrixXd truth = inst.targets;
  if (inst.domain == Domain::Matching) {
    pred = edges_to_square(pred.col(0));
    truth = edges_to_square(truth.col(0));
  }
  ExportResult res;
  res.theta_path = prefix + "_theta.csv";
  res.outweight_path = prefix + "_outweight.csv";
  {
    std::ofstream os = detail::open_output(res.theta_path);
    for (Eigen::Index j = 0; j < pred.cols(); ++j) os << (j ? "," : "") << "c" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      for (Eigen::Index j = 0; j < pred.cols(); ++j) os << (j ? "," : "") << detail::format_double(pred(i, j));
      os << '\n';
    }
    if (!os) throw IoError("failed writing '" + res.theta_path + "'");
  }
  const Eigen::VectorXd pw = pred.rowwise().sum();
  const Eigen::VectorXd tw = truth.rowwise().sum();
  {
    std::ofstream os = detail::open_output(res.outweight_path);
    os << "row,predicted,true\n";
    for (Eigen::Index i = 0; i < pw.size(); ++i) {
      os << i << ',' << detail::format_double(pw(i)) << ',' << detail::format_double(tw(i)) << '\n';
    }
    if (!os) throw IoError("failed writing '" + res.outweight_path + "'");
  }
  res.correlation = pw.size() >= 2 ? pearson(pw, tw) : 0.0;
  return res;
}

}  // namespace dfl

#endif  // DFL_HARNESS_HPP_
