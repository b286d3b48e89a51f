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

// Command-line front end: generate, train, evaluate, benchmark, export.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dfl/domains.hpp"
#include "dfl/harness.hpp"
#include "dfl/models.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dfl;

struct Options {
  ExperimentConfig cfg;
  std::string domain = "budget";
  std::string method = "decision";
  std::vector<std::string> methods{"decision", "two-stage", "random"};
  std::string data_dir;
  std::string out;
  std::string out_dir;
  std::string model;
  std::string instance;
  std::size_t count = 0;
  std::size_t index = 0;
  bool no_standardize = false;
};

void add_data_options(CLI::App* app, Options& o) {
  auto& d = o.cfg.data;
  app->add_option("--domain", o.domain, "budget, matching or recommendation")
      ->check(CLI::IsMember({"budget", "matching", "recommendation"}))
      ->capture_default_str();
  app->add_option("--k", d.k, "cardinality budget (budget, recommendation)")->capture_default_str();
  app->add_option("--seed", o.cfg.seed, "master seed")->capture_default_str();
  app->add_option("--instances", o.cfg.instances, "number of generated instances (0: domain default)")
      ->capture_default_str();
  app->add_option("--channels", d.channels, "budget: channels per instance")->capture_default_str();
  app->add_option("--customers", d.customers, "budget: customers per instance")->capture_default_str();
  app->add_option("--density", d.density, "budget: edge density")->capture_default_str();
  app->add_option("--side", d.side, "matching: nodes per side")->capture_default_str();
  app->add_option("--feature-dim", d.feature_dim, "matching: node feature width")->capture_default_str();
  app->add_option("--communities", d.communities, "matching: planted communities")->capture_default_str();
  app->add_option("--p-in", d.matching.p_in, "matching: edge probability within a community")
      ->capture_default_str();
  app->add_option("--p-out", d.matching.p_out, "matching: edge probability across communities")
      ->capture_default_str();
  app->add_option("--feature-noise", d.matching.feature_noise, "matching: node feature noise std")
      ->capture_default_str();
  app->add_option("--items", d.items, "recommendation: items per instance")->capture_default_str();
  app->add_option("--topics", d.topics, "recommendation: topics")->capture_default_str();
  app->add_option("--users", d.users, "recommendation: users providing ratings")->capture_default_str();
  app->add_option("--membership", d.recommendation.membership, "recommendation: topic membership probability")
      ->capture_default_str();
  app->add_option("--rating-noise", d.recommendation.rating_noise, "recommendation: rating noise std")
      ->capture_default_str();
  app->add_option("--missing", d.recommendation.missing, "recommendation: probability a rating is missing")
      ->capture_default_str();
}

void add_training_options(CLI::App* app, Options& o) {
  auto& c = o.cfg;
  app->add_option("--depth", c.depth, "network depth: 1 linear, 2 one hidden layer")->capture_default_str();
  app->add_option("--hidden", c.hidden, "hidden layer width")->capture_default_str();
  app->add_option("--epochs", c.epochs, "maximum training epochs")->capture_default_str();
  app->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--gamma", c.gamma, "quadratic regularizer of the matching layer")->capture_default_str();
  app->add_option("--patience", c.patience, "epochs without validation gain before stopping")
      ->capture_default_str();
  app->add_option("--validation-fraction", c.validation_fraction, "held-out share of training instances")
      ->capture_default_str();
  app->add_flag("--no-standardize", o.no_standardize, "feed raw features instead of z-scores");
  app->add_option("--sga-steps", c.sga.steps, "projected gradient ascent iterations")->capture_default_str();
  app->add_option("--sga-step-size", c.sga.step_size, "projected gradient ascent step size")->capture_default_str();
}

void finalize(Options& o) {
  o.cfg.data.domain = *parse_domain(o.domain);
  o.cfg.standardize = !o.no_standardize;
}

void require_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("directory '" + dir + "' does not exist");
}

/// Instances from --data-dir (every *.txt, sorted by name) or generated.
std::vector<DatasetInstance> load_or_generate(const Options& o) {
  if (o.data_dir.empty()) return generate_dataset(o.cfg.data, o.cfg.seed, o.cfg.instance_count());
  require_dir(o.data_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.data_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no instance files (*.txt) in '" + o.data_dir + "'");
  std::vector<DatasetInstance> out;
  for (const auto& f : files) {
    try {
      out.push_back(load_instance(f.string(), o.cfg.data.domain));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what(), 0);
    }
  }
  return out;
}

Mlp load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model '" + path + "'");
  return read_mlp(is);
}

std::string fmt(double v) { return detail::format_double(v); }

int cmd_generate(Options& o) {
  finalize(o);
  require_dir(o.out_dir);
  const std::size_t n = o.count > 0 ? o.count : o.cfg.instance_count();
  const auto data = generate_dataset(o.cfg.data, o.cfg.seed, n);
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "instance_%04zu.txt", i);
    save_instance((fs::path(o.out_dir) / name).string(), data[i]);
  }
  std::cout << "wrote " << data.size() << " " << o.domain << " instances to " << o.out_dir << "\n";
  return 0;
}

int cmd_train(Options& o) {
  finalize(o);
  const auto m = parse_method(o.method);
  if (!m || *m == Method::Random) throw ConfigError("--method must be decision or two-stage");
  const auto data = load_or_generate(o);
  if (!o.model.empty()) detail::check_output_dir(o.model);
  std::vector<const DatasetInstance*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  const auto val = static_cast<std::size_t>(o.cfg.validation_fraction * static_cast<double>(ptrs.size()));
  TrainingReport rep;
  const Mlp net = train_model(o.cfg, *m, ptrs, val < ptrs.size() ? val : 0, o.cfg.seed, &rep);
  if (!o.model.empty()) {
    std::ofstream os = detail::open_output(o.model);
    write_mlp(os, net);
    if (!os) throw IoError("failed writing '" + o.model + "'");
  }
  std::cout << "trained " << method_label(*m, o.cfg.depth) << " on " << ptrs.size() - val << " instances, "
            << rep.epochs_run << " epochs, best epoch " << rep.best_epoch << "\n";
  return 0;
}

int cmd_evaluate(Options& o) {
  finalize(o);
  const Mlp net = load_model(o.model);
  const auto data = load_or_generate(o);
  std::vector<const DatasetInstance*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  const Evaluation ev = evaluate_model(&net, ptrs, o.cfg.sga, o.cfg.seed);
  if (!o.out.empty()) {
    std::ofstream os = detail::open_output(o.out);
    os << "instance,decision_quality\n";
    for (std::size_t i = 0; i < ev.quality.size(); ++i) os << i << ',' << fmt(ev.quality[i]) << '\n';
    if (!os) throw IoError("failed writing '" + o.out + "'");
  }
  std::cout << "mean decision quality " << fmt(ev.mean_quality()) << ", mse " << fmt(ev.mse);
  if (!std::isnan(ev.ce)) std::cout << ", ce " << fmt(ev.ce);
  if (!std::isnan(ev.auc)) std::cout << ", auc " << fmt(ev.auc);
  std::cout << "\n";
  return 0;
}

int cmd_benchmark(Options& o) {
  finalize(o);
  o.cfg.methods.clear();
  for (const auto& s : o.methods) {
    const auto m = parse_method(s);
    if (!m) throw ConfigError("unknown method '" + s + "'");
    o.cfg.methods.push_back(*m);
  }
  o.cfg.out = o.out;
  const ExperimentResult res = run_experiment(o.cfg);
  for (const auto& s : res.summary) {
    std::cout << s.method << ": decision quality " << fmt(s.quality.mean) << " [" << fmt(s.quality.low) << ", "
              << fmt(s.quality.high) << "]\n";
  }
  if (!o.out.empty()) std::cout << "wrote " << o.out << " and " << summary_path(o.out) << "\n";
  return 0;
}

int cmd_export(Options& o) {
  finalize(o);
  const Mlp net = load_model(o.model);
  DatasetInstance inst;
  if (!o.instance.empty()) {
    inst = load_instance(o.instance, o.cfg.data.domain);
  } else {
    const auto data = generate_dataset(o.cfg.data, o.cfg.seed, o.index + 1);
    inst = data.back();
  }
  const ExportResult res = export_predictions(net, inst, o.out);
  std::cout << "wrote " << res.theta_path << " and " << res.outweight_path << "; out-weight correlation "
            << fmt(res.correlation) << "\n";
  return 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool given(const std::vector<std::string>& args, const std::string& key) {
  for (const auto& a : args) {
    if (a == key || a.rfind(key + "=", 0) == 0) return true;
  }
  return false;
}

/// Splices "--key value" pairs from every "--config FILE" in front of the
/// explicit flags. Keys also given on the command line are dropped.
/// Lines are "key = value"; '#' starts a comment; "true"/"false" toggle flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> head, tail;
  std::size_t i = 0;
  for (; i < args.size() && (args[i].empty() || args[i][0] == '-'); ++i) head.push_back(args[i]);
  if (i < args.size()) head.push_back(args[i++]);  // subcommand
  for (; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      tail.push_back(args[i]);
      continue;
    }
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
    std::string line;
    for (int no = 1; std::getline(is, line); ++no) {
      line = trim(line.substr(0, line.find('#')));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw CLI::ValidationError("--config", path + ":" + std::to_string(no) + ": expected key = value");
      }
      const std::string key = "--" + trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value == "true") {
        head.push_back(key);
        continue;
      }
      if (value == "false") continue;
      std::istringstream vs(value);
      head.push_back(key);
      for (std::string v; vs >> v;) head.push_back(v);
    }
  }
  std::vector<std::string> out;
  for (std::size_t j = 0; j < head.size(); ++j) {
    const bool key = head[j].rfind("--", 0) == 0;
    if (key && given(tail, head[j])) {
      while (j + 1 < head.size() && head[j + 1].rfind("--", 0) != 0) ++j;
      continue;
    }
    out.push_back(head[j]);
  }
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-focused learning for combinatorial optimization"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "write synthetic instances to a directory");
  add_data_options(gen, o);
  gen->add_option("--count", o.count, "number of instances (0: domain default)");
  gen->add_option("--out-dir", o.out_dir, "output directory (must exist)")->required();

  auto* train = app.add_subcommand("train", "train one model and save a checkpoint");
  add_data_options(train, o);
  add_training_options(train, o);
  train->add_option("--method", o.method, "decision or two-stage")
      ->check(CLI::IsMember({"decision", "two-stage", "2stage"}))
      ->capture_default_str();
  train->add_option("--data-dir", o.data_dir, "read *.txt instances instead of generating");
  train->add_option("--model-out", o.model, "checkpoint path");

  auto* eval = app.add_subcommand("evaluate", "decision quality of a saved model");
  add_data_options(eval, o);
  eval->add_option("--model", o.model, "checkpoint path")->required();
  eval->add_option("--data-dir", o.data_dir, "read *.txt instances instead of generating");
  eval->add_option("--out", o.out, "per-instance CSV path");
  eval->add_option("--sga-steps", o.cfg.sga.steps, "projected gradient ascent iterations")->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "repeated random splits; detail and summary CSV");
  add_data_options(bench, o);
  add_training_options(bench, o);
  bench->add_option("--splits", o.cfg.splits, "number of random train/test splits")->capture_default_str();
  bench->add_option("--train-fraction", o.cfg.train_fraction, "training share of instances")->capture_default_str();
  bench->add_option("--methods", o.methods, "subset of decision, two-stage, random")
      ->check(CLI::IsMember({"decision", "two-stage", "2stage", "random"}))
      ->capture_default_str();
  bench->add_option("--threads", o.cfg.threads, "concurrent splits (0: hardware concurrency)")
      ->capture_default_str();
  bench->add_option("--bootstrap-draws", o.cfg.bootstrap_draws, "bootstrap resamples for the summary")
      ->capture_default_str();
  bench->add_option("--out", o.out, "detail CSV path; the summary goes next to it");

  auto* exp = app.add_subcommand("export", "write predicted matrix and out-weight CSVs");
  add_data_options(exp, o);
  exp->add_option("--model", o.model, "checkpoint path")->required();
  exp->add_option("--instance", o.instance, "instance file (default: generate from --seed)");
  exp->add_option("--index", o.index, "generated instance index when no file is given");
  exp->add_option("--out", o.out, "output prefix")->required();

  std::string config_path;
  for (auto* sub : {gen, train, eval, bench, exp}) {
    sub->add_option("--config", config_path, "read options from a key = value file; flags on the command line win");
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (gen->parsed()) return cmd_generate(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (bench->parsed()) return cmd_benchmark(o);
    if (exp->parsed()) return cmd_export(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
