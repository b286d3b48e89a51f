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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of hard failures (capped at 1); soft expectations only warn.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfl/domains.hpp"
#include "dfl/harness.hpp"
#include "dfl/models.hpp"
#include "dfl/qp_layer.hpp"
#include "dfl/submod_layer.hpp"
#include "oracles.hpp"

namespace {

using namespace dfl;
using Clock = std::chrono::steady_clock;

int hard_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail, bool soft = false) {
  const char* tag = pass ? "PASS" : (soft ? "FAIL (soft warning, not counted)" : "FAIL");
  std::printf("criterion %2d: %s  %s\n", id, tag, detail.c_str());
  std::fflush(stdout);
  if (!pass && !soft) ++hard_failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Smallest of max(lambda_i, |slack_i|) over the inequality rows: how far the
// solution is from a point where a constraint is both tight and unpriced.
double strict_complementarity(const QpProblem& p, const LayerSolution& s) {
  const Eigen::VectorXd slack = p.h - p.G * s.x;
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < slack.size(); ++i) m = std::min(m, std::max(s.lambda(i), std::abs(slack(i))));
  return m;
}

void kkt_backward() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int resampled = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 10;
    QpProblem prob;
    LayerSolution sol;
    for (;;) {
      prob = oracle::random_box_qp(rng, n, 0.1, 0, false);
      sol = solve_qp(prob);
      if (strict_complementarity(prob, sol) >= 1e-3) break;
      ++resampled;
    }
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index i = 0; i < n; ++i) jac.col(i) = backward_qp(prob, sol, Eigen::VectorXd::Unit(n, i));
    jac.transposeInPlace();
    const Eigen::MatrixXd fd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& t) {
          QpProblem q = prob;
          q.theta = t;
          return solve_qp(q).x;
        },
        prob.theta, 1e-5);
    worst = std::max(worst, oracle::rel_error(jac, fd));
  }
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-3 && secs < 10.0,
         "max rel error " + fmt("%.3g", worst) + ", " + std::to_string(resampled) +
             " near-degenerate draws resampled, " + fmt("%.2f s", secs));
}

void regularization_bound() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    QpProblem prob;
    prob.theta.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) prob.theta(i) = u(rng);
    unit_box(n, prob.G, prob.h);
    prob.A.resize(0, n);
    prob.b.resize(0);
    const double opt = prob.theta.cwiseMax(0.0).sum();  // unit-box LP in closed form
    for (double gamma : {0.01, 0.1, 1.0}) {
      prob.gamma = gamma;
      const double val = prob.theta.dot(solve_qp(prob).x);
      worst_slack = std::min(worst_slack, val - (opt - gamma * static_cast<double>(n) - 1e-6));
    }
  }
  const double secs = seconds_since(t0);
  report(2, worst_slack >= 0.0 && secs < 30.0,
         "min margin to bound " + fmt("%.3g", worst_slack) + ", " + fmt("%.2f s", secs));
}

std::vector<std::pair<CoverageInstance, Eigen::VectorXd>> small_coverage_instances() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<std::pair<CoverageInstance, Eigen::VectorXd>> out;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index v = 1 + trial % 6;
    const Eigen::Index items = 1 + (trial / 6) % 4;
    CoverageInstance inst = oracle::random_coverage(rng, v, items, 1);
    Eigen::VectorXd x(v);
    for (Eigen::Index i = 0; i < v; ++i) x(i) = u(rng);
    out.emplace_back(std::move(inst), std::move(x));
  }
  return out;
}

void multilinear_closed_form() {
  const auto cases = small_coverage_instances();
  double worst_z = 0.0, worst_grad = 0.0, worst_hess = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& [inst, x] = cases[c];
    const auto [mean, se] = oracle::extension_by_sampling(x, inst, 1000000, 500 + c);
    const double diff = std::abs(extension_value(x, inst) - mean);
    worst_z = std::max(worst_z, se > 0.0 ? diff / se : (diff > 1e-12 ? 1e9 : 0.0));

    const Eigen::MatrixXd fd_grad = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& y) { return Eigen::VectorXd::Constant(1, extension_value(y, inst)); }, x, 1e-5);
    worst_grad = std::max(worst_grad, (extension_grad_x(x, inst) - fd_grad.transpose()).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd fd_hess =
        oracle::fd_jacobian([&](const Eigen::VectorXd& y) { return extension_grad_x(y, inst); }, x, 1e-5);
    worst_hess = std::max(worst_hess, (extension_hessian_x(x, inst) - fd_hess).cwiseAbs().maxCoeff());
  }
  report(3, worst_z <= 3.0 && worst_grad <= 1e-6 && worst_hess <= 1e-6,
         "max |z| " + fmt("%.2f", worst_z) + ", grad err " + fmt("%.2g", worst_grad) + ", Hessian err " +
             fmt("%.2g", worst_hess));
}

void sga_and_duals() {
  std::mt19937_64 rng(104);
  SgaOptions opts;
  opts.steps = 2000;
  double worst_ratio = std::numeric_limits<double>::infinity(), ratio_sum = 0.0, worst_residual = 0.0;
  bool duals_ok = true;
  std::string dual_note;
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const int k = 1 + trial % std::min<int>(3, static_cast<int>(n));
    const CoverageInstance inst = oracle::random_coverage(rng, n, 2 + trial % 7, k);
    const SgaResult r = sga_maximize(inst, opts, 900 + trial);
    const double opt = coverage_value(brute_force_max(inst), inst);
    const double ratio = extension_value(r.x, inst) / opt;
    worst_ratio = std::min(worst_ratio, ratio);
    ratio_sum += ratio;
    const Eigen::VectorXd g = extension_grad_x(r.x, inst);
    try {
      const CardinalityDuals d = recover_duals(r.x, g, k);
      worst_residual = std::max(worst_residual, cardinality_kkt_residual(r.x, g, k, d));
    } catch (const NotStationary& e) {
      duals_ok = false;
      dual_note = std::string(", trial ") + std::to_string(trial) + ": " + e.what();
    }
  }
  report(4, worst_ratio >= 0.5,
         "min F(x)/OPT " + fmt("%.4f", worst_ratio) + ", mean " + fmt("%.4f", ratio_sum / 30.0));
  report(5, duals_ok && worst_residual <= 1e-4, "max KKT residual " + fmt("%.2g", worst_residual) + dual_note);
}

void grad_theta_closed_form() {
  double worst = 0.0;
  for (const auto& [inst, x] : small_coverage_instances()) {
    const Eigen::Index n = inst.actions();
    const Eigen::Map<const Eigen::VectorXd> flat(inst.theta.data(), inst.theta.size());
    // Column (k + j |V|) of the FD Jacobian is d grad_x F / d theta_kj.
    const Eigen::MatrixXd fd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& t) {
          CoverageInstance p = inst;
          p.theta = Eigen::Map<const Eigen::MatrixXd>(t.data(), n, inst.items());
          return extension_grad_x(x, p);
        },
        flat, 1e-5);
    const auto blocks = grad_theta_of_grad_x(x, inst);
    for (Eigen::Index j = 0; j < inst.items(); ++j) {
      worst = std::max(worst, (blocks[static_cast<std::size_t>(j)] - fd.middleCols(j * n, n)).cwiseAbs().maxCoeff());
    }
  }
  report(6, worst <= 1e-6, "max abs error " + fmt("%.2g", worst));
}

void projection_oracle() {
  std::mt19937_64 rng(105);
  std::normal_distribution<double> g(0.4, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    const double k = 1.0 + static_cast<double>(trial % static_cast<int>(n));
    worst = std::max(worst, (project_capped_simplex(v, k) - oracle::capped_simplex_by_enumeration(v, k))
                                .cwiseAbs()
                                .maxCoeff());
  }
  report(7, worst <= 1e-8, "max abs error " + fmt("%.2g", worst));
}

// dObjective/domega through MLP -> layer -> true-theta objective, from the
// training gradient, against central differences of the whole pipeline.
struct PipelineCheck {
  double rel = 0.0;
  double grad_norm = 0.0;
};

PipelineCheck pipeline_check(const ExperimentConfig& cfg, const Mlp& net, const DatasetInstance& inst,
                             const std::function<double(const Mlp&)>& objective) {
  MlpGradients grads;
  detail::instance_gradient(cfg, Method::Decision, net, inst.features, inst, 5, grads);
  const Eigen::VectorXd analytic = -flatten(grads);  // the training loss is minus the objective
  const Eigen::VectorXd w0 = flatten(net.layers);
  const Eigen::MatrixXd fd = oracle::fd_jacobian(
      [&](const Eigen::VectorXd& w) {
        Mlp m = net;
        unflatten(w, m.layers);
        return Eigen::VectorXd::Constant(1, objective(m));
      },
      w0, 1e-5);
  return {oracle::rel_error(analytic, fd.transpose()), analytic.norm()};
}

void full_pipeline() {
  ExperimentConfig cfg;
  cfg.gamma = 0.1;
  cfg.depth = 2;
  cfg.hidden = 4;

  // Matching: 3 + 3 nodes, features of both endpoints, one hidden layer.
  const DatasetInstance m = gen_bipartite_matching(106, 3, 2, 2, MatchingOptions{});
  const Mlp mnet = make_model(cfg, m, 7);
  const PipelineCheck qp = pipeline_check(cfg, mnet, m, [&](const Mlp& net) {
    const Eigen::MatrixXd pred = mlp_forward(net, m.features);
    const QpProblem p = matching_to_qp(edges_to_square(pred.col(0)), cfg.gamma);
    return m.targets.col(0).dot(solve_qp(p).x);
  });

  // Coverage: 6 channels, 5 customers, k = 2, ascent run to convergence.
  // Every channel has customers, and the weights are scaled so the
  // predictions spread over (0, 0.2) instead of clustering at 0.1.
  ExperimentConfig ccfg = cfg;
  ccfg.depth = 1;
  ccfg.sga.steps = 2000;
  DatasetInstance b = gen_budget_allocation(109, 6, 5, 0.5);
  b.k = 2;
  Mlp bnet = make_model(ccfg, b, 8);
  bnet.layers.front().weight *= 30.0;
  const CoverageInstance truth = coverage_of(b.targets, b.k);
  auto coverage_objective = [&](const ExperimentConfig& c) {
    return [&, c](const Mlp& net) {
      const SgaResult r = sga_maximize(coverage_of(mlp_forward(net, b.features), b.k), c.sga, 5);
      return extension_value(r.x, truth);
    };
  };
  const PipelineCheck sub = pipeline_check(ccfg, bnet, b, coverage_objective(ccfg));
  const SgaResult settled = sga_maximize(coverage_of(mlp_forward(bnet, b.features), b.k), ccfg.sga, 5);
  const bool integral = ((settled.x.array().abs() <= 1e-12) || (settled.x.array() == 1.0)).all();

  // Informational: 100-step ascent stops at a fractional iterate, where the
  // implicit gradient and differences of the unrolled ascent differ in scale.
  ExperimentConfig short_cfg = ccfg;
  short_cfg.sga.steps = 100;
  MlpGradients g;
  detail::instance_gradient(short_cfg, Method::Decision, bnet, b.features, b, 5, g);
  const Eigen::VectorXd implicit = -flatten(g);
  const auto obj = coverage_objective(short_cfg);
  const Eigen::MatrixXd unrolled = oracle::fd_jacobian(
      [&](const Eigen::VectorXd& w) {
        Mlp mm = bnet;
        unflatten(w, mm.layers);
        return Eigen::VectorXd::Constant(1, obj(mm));
      },
      flatten(bnet.layers), 1e-5);
  const Eigen::VectorXd u = unrolled.transpose();
  const double cosine = implicit.dot(u) / std::max(1e-300, implicit.norm() * u.norm());

  report(8, qp.rel <= 1e-2 && sub.rel <= 1e-2,
         "matching rel " + fmt("%.2g", qp.rel) + " (|grad| " + fmt("%.3g", qp.grad_norm) + "), coverage rel " +
             fmt("%.2g", sub.rel) + " (|grad| " + fmt("%.3g", sub.grad_norm) +
             (integral ? ", ascent settles on a vertex where dx/dtheta = 0" : ", fractional fixed point") +
             "); 100-step iterate: cosine " + fmt("%.4f", cosine) + ", norm ratio implicit/unrolled " +
             fmt("%.3f", implicit.norm() / std::max(1e-300, u.norm())));
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const SummaryRow* find_row(const ExperimentResult& r, const std::string& label) {
  for (const auto& s : r.summary) {
    if (s.method == label) return &s;
  }
  return nullptr;
}

void benchmarks(const std::filesystem::path& dir) {
  ExperimentConfig budget;
  budget.data.domain = Domain::Budget;
  budget.data.k = 5;
  budget.depth = 1;
  budget.splits = 5;
  budget.seed = 1;
  budget.out = (dir / "budget.csv").string();
  auto t0 = Clock::now();
  const ExperimentResult br = run_experiment(budget);
  const double budget_secs = seconds_since(t0);

  ExperimentConfig matching = budget;
  matching.data.domain = Domain::Matching;
  matching.depth = 2;
  matching.out = (dir / "matching.csv").string();
  t0 = Clock::now();
  const ExperimentResult mr = run_experiment(matching);
  const double matching_secs = seconds_since(t0);

  const SummaryRow* bd = find_row(br, "NN1-Decision");
  const SummaryRow* b2 = find_row(br, "NN1-2Stage");
  const SummaryRow* md = find_row(mr, "NN2-Decision");
  const SummaryRow* m2 = find_row(mr, "NN2-2Stage");
  const bool budget_ok = bd->quality.mean > b2->quality.mean;
  const bool matching_ok = md->quality.mean > m2->quality.mean;
  report(9, budget_ok && matching_ok && budget_secs < 600.0 && matching_secs < 600.0,
         "budget NN1-Decision " + fmt("%.4f", bd->quality.mean) + " vs NN1-2Stage " + fmt("%.4f", b2->quality.mean) +
             " (" + fmt("%.1f s", budget_secs) + "); matching NN2-Decision " + fmt("%.4f", md->quality.mean) +
             " vs NN2-2Stage " + fmt("%.4f", m2->quality.mean) + " (" + fmt("%.1f s", matching_secs) + ")");

  const double mse_d = bd->mse->mean, mse_2 = b2->mse->mean;
  report(10, mse_2 < mse_d && b2->quality.mean < bd->quality.mean,
         "budget MSE 2Stage " + fmt("%.4g", mse_2) + " vs Decision " + fmt("%.4g", mse_d) + "; quality 2Stage " +
             fmt("%.4f", b2->quality.mean) + " vs Decision " + fmt("%.4f", bd->quality.mean),
         true);

  ExperimentConfig again = budget;
  again.out = (dir / "budget_repeat.csv").string();
  again.threads = 3;
  run_experiment(again);
  const bool same = slurp(budget.out) == slurp(again.out) &&
                    slurp(summary_path(budget.out)) == slurp(summary_path(again.out)) && !slurp(budget.out).empty();
  report(11, same, same ? "detail and summary CSV byte-identical across runs" : "CSV output differs between runs");
}

}  // namespace

int main() {
  const std::filesystem::path dir = std::filesystem::current_path() / "acceptance_out";
  std::filesystem::create_directories(dir);
  try {
    kkt_backward();
    regularization_bound();
    multilinear_closed_form();
    sga_and_duals();
    grad_theta_closed_form();
    projection_oracle();
    full_pipeline();
    benchmarks(dir);
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d hard failure(s)\n", hard_failures);
  return hard_failures > 0 ? 1 : 0;
}
