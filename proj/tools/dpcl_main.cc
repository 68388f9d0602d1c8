// Copyright 2026 The DPCL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dpcl: command-line front end.
//
//   dpcl run [--config exp.cfg] [--set key=value ...]
//   dpcl attack --policy learned --epsilon 1 --tau 2 --trials 100000
//   dpcl curve --epsilon 1 --delta 1e-7 --k-max 20
//   dpcl calibrate --epsilon 0.5,1,8 --delta 1e-5,1e-7
//   dpcl inspect embeddings.emb1 [--full]
//   dpcl synth out.emb1 --classes 10 --per-class 50 --dim 32

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpcl/accountant.h"
#include "dpcl/attack_sim.h"
#include "dpcl/emb1.h"
#include "dpcl/errors.h"
#include "dpcl/experiment.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"
#include "dpcl/streams.h"
#include "json.hpp"

namespace {

using nlohmann::json;

int RunCommand(const std::filesystem::path& config, const std::vector<std::string>& sets,
               bool quiet) {
  const dpcl::ExperimentConfig cfg =
      config.empty() ? dpcl::ParseConfig("", sets) : dpcl::LoadConfig(config, sets);
  cfg.Validate();
  const dpcl::MetricsReport report = dpcl::RunAndWrite(cfg);
  for (const dpcl::RepeatReport& r : report.repeats) {
    for (const std::string& w : r.warnings) {
      std::cerr << "warning: repeat " << r.repeat << ": " << w << '\n';
    }
  }
  if (!quiet) {
    const dpcl::RepeatReport& first = report.repeats.front();
    json out = {{"method", dpcl::ToString(cfg.method)},
                {"repeats", cfg.repeats},
                {"final_average_accuracy",
                 {{"min", report.final_avg_acc.min},
                  {"median", report.final_avg_acc.median},
                  {"max", report.final_avg_acc.max}}},
                {"per_task_total",
                 {{"epsilon", first.per_task_total.epsilon},
                  {"delta", first.per_task_total.delta}}},
                {"sequential_total",
                 {{"epsilon", first.sequential_total.epsilon},
                  {"delta", first.sequential_total.delta}}},
                {"output", cfg.output.string()}};
    std::cout << out.dump(2) << '\n';
  }
  return 0;
}

int AttackCommand(const std::string& policy_name, double epsilon, double tau,
                  std::uint64_t trials, std::uint64_t seed, std::size_t classes,
                  std::size_t per_class, std::size_t dim) {
  dpcl::LabelPolicy policy;
  switch (dpcl::ParseLabelPolicyKind(policy_name)) {
    case dpcl::LabelPolicyKind::kData:
      policy = dpcl::LabelPolicy::Data();
      break;
    case dpcl::LabelPolicyKind::kPrior:
      policy = dpcl::LabelPolicy::Prior({});
      break;
    case dpcl::LabelPolicyKind::kLearned:
      policy = dpcl::LabelPolicy::Learned(tau, epsilon);
      break;
  }
  const dpcl::GameConfig cfg =
      dpcl::SyntheticGame(policy, trials, seed, classes, per_class, dim);
  const dpcl::GameResult result = dpcl::RunGame(cfg);
  json report = dpcl::GameReport(cfg, result);
  if (cfg.policy.kind == dpcl::LabelPolicyKind::kLearned) {
    report["expected_release_rate"] =
        1.0 - dpcl::LaplaceTail(tau - 1.0, dpcl::LaplaceParams{1.0 / epsilon});
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int CurveCommand(const std::vector<double>& epsilons, double delta, std::int64_t k_max,
                 double threshold, bool as_json) {
  const auto rows = dpcl::ClassLossCurve(epsilons, delta, k_max);
  if (as_json) {
    json out = json::array();
    for (const auto& p : rows) {
      out.push_back({{"epsilon", p.epsilon},
                     {"delta", delta},
                     {"k", p.k},
                     {"delta_k", dpcl::GroupDpDelta({p.epsilon, delta, p.k})},
                     {"drop_probability", p.drop_probability}});
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::printf("epsilon,delta,k,delta_k,drop_probability\n");
  for (const auto& p : rows) {
    std::printf("%.10g,%.10g,%lld,%.17g,%.17g\n", p.epsilon, delta,
                static_cast<long long>(p.k), dpcl::GroupDpDelta({p.epsilon, delta, p.k}),
                p.drop_probability);
  }
  for (double eps : epsilons) {
    std::int64_t largest = 0;
    for (const auto& p : rows) {
      if (p.epsilon == eps && p.drop_probability >= threshold) largest = p.k;
    }
    std::fprintf(stderr, "epsilon=%g: classes of up to %lld samples are dropped with "
                 "probability >= %g\n", eps, static_cast<long long>(largest), threshold);
  }
  return 0;
}

int CalibrateCommand(const std::vector<double>& epsilons, const std::vector<double>& deltas,
                     double sensitivity) {
  json rows = json::array();
  for (double eps : epsilons) {
    for (double delta : deltas) {
      const dpcl::PrivacyBudget budget{eps, delta};
      const dpcl::GaussianParams p = dpcl::CalibrateGaussian(budget, sensitivity);
      const double achieved = dpcl::GaussianDelta(eps, p.sigma, sensitivity);
      rows.push_back({{"epsilon", eps},
                      {"delta", delta},
                      {"sensitivity", sensitivity},
                      {"sigma", p.sigma},
                      {"achieved_delta", achieved},
                      {"abs_error", std::abs(achieved - delta)},
                      {"classical_sigma", dpcl::ClassicalGaussianSigma(budget, sensitivity)}});
    }
  }
  std::cout << rows.dump(2) << '\n';
  return 0;
}

int InspectCommand(const std::filesystem::path& path, bool full) {
  const dpcl::Emb1Header header = dpcl::InspectEmbeddings(path);
  json out = {{"path", path.string()},
              {"dim", header.dim},
              {"count", header.count},
              {"bytes", std::filesystem::file_size(path)}};
  if (full) {
    const dpcl::LabeledDataset data = dpcl::LoadEmbeddings(path);
    out["universe_size"] = data.universe.size();
    out["dummy_labels"] = data.universe.dummy_count();
    out["labels_present"] = data.data.Labels().size();
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int SynthCommand(const std::filesystem::path& path, std::size_t classes,
                 std::size_t per_class, std::size_t dim, double separation,
                 std::uint64_t seed) {
  const dpcl::LabeledDataset data =
      dpcl::SynthMixture(classes, per_class, dim, separation, seed);
  dpcl::SaveEmbeddings(data.data, data.universe, path);
  return InspectCommand(path, false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private continual learning over frozen embeddings"};
  app.require_subcommand(1);

  std::filesystem::path config;
  std::vector<std::string> sets;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("-c,--config", config, "Config file (key = value lines)");
  run->add_option("--set", sets, "Override a config key, as key=value");
  run->add_flag("-q,--quiet", quiet, "Do not print the summary");

  std::string policy = "learned";
  double epsilon = 1.0;
  double tau = 2.0;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  std::size_t classes = 5;
  std::size_t per_class = 20;
  std::size_t dim = 8;
  auto* attack = app.add_subcommand("attack", "Label-space distinguishing game");
  attack->add_option("--policy", policy, "data | prior | learned")->capture_default_str();
  attack->add_option("--epsilon", epsilon, "Label release epsilon")->capture_default_str();
  attack->add_option("--tau", tau, "Label release threshold")->capture_default_str();
  attack->add_option("--trials", trials)->capture_default_str();
  attack->add_option("--seed", seed)->capture_default_str();
  attack->add_option("--classes", classes, "Classes in the base data")->capture_default_str();
  attack->add_option("--per-class", per_class)->capture_default_str();
  attack->add_option("--dim", dim)->capture_default_str();

  std::vector<double> curve_eps = {1.0};
  double curve_delta = 1e-7;
  std::int64_t k_max = 20;
  double threshold = 0.99;
  bool as_json = false;
  auto* curve = app.add_subcommand("curve", "Probability of dropping a k-sample class");
  curve->add_option("--epsilon", curve_eps, "One or more epsilons")->delimiter(',')
      ->capture_default_str();
  curve->add_option("--delta", curve_delta)->capture_default_str();
  curve->add_option("--k-max", k_max)->capture_default_str();
  curve->add_option("--threshold", threshold, "Drop probability to summarize")
      ->capture_default_str();
  curve->add_flag("--json", as_json, "JSON instead of CSV");

  std::vector<double> cal_eps = {0.5, 1.0, 8.0};
  std::vector<double> cal_delta = {1e-5, 1e-7};
  double sensitivity = 1.0;
  auto* calibrate = app.add_subcommand("calibrate", "Gaussian calibration round trip");
  calibrate->add_option("--epsilon", cal_eps)->delimiter(',')->capture_default_str();
  calibrate->add_option("--delta", cal_delta)->delimiter(',')->capture_default_str();
  calibrate->add_option("--sensitivity", sensitivity)->capture_default_str();

  std::filesystem::path emb_path;
  bool full = false;
  auto* inspect = app.add_subcommand("inspect", "Print EMB1 metadata");
  inspect->add_option("path", emb_path)->required();
  inspect->add_flag("--full", full, "Also load the records and the label sidecar");

  std::filesystem::path synth_path;
  std::size_t synth_classes = 10;
  std::size_t synth_per_class = 50;
  std::size_t synth_dim = 32;
  double separation = 4.0;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic mixture as EMB1");
  synth->add_option("path", synth_path)->required();
  synth->add_option("--classes", synth_classes)->capture_default_str();
  synth->add_option("--per-class", synth_per_class)->capture_default_str();
  synth->add_option("--dim", synth_dim)->capture_default_str();
  synth->add_option("--separation", separation)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return RunCommand(config, sets, quiet);
    if (*attack) {
      return AttackCommand(policy, epsilon, tau, trials, seed, classes, per_class, dim);
    }
    if (*curve) return CurveCommand(curve_eps, curve_delta, k_max, threshold, as_json);
    if (*calibrate) return CalibrateCommand(cal_eps, cal_delta, sensitivity);
    if (*inspect) return InspectCommand(emb_path, full);
    if (*synth) {
      return SynthCommand(synth_path, synth_classes, synth_per_class, synth_dim, separation,
                          synth_seed);
    }
  } catch (const dpcl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
