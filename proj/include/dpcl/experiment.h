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

// Experiment driver: dataset -> task stream -> label policy -> classifier ->
// ledger -> metrics, repeated over seeds.
//
// Config files are flat UTF-8 "key = value" lines. Blank lines and lines
// starting with '#' are ignored. Keys:
//
//   dataset.path                  EMB1 file (otherwise a synthetic mixture)
//   synth.classes, synth.per_class, synth.dim, synth.separation, synth.seed
//   stream.tasks, stream.mode (disjoint|iblurry|siblurry),
//   stream.disjoint_fraction, stream.blurry_spread, stream.imbalance
//   method                        cosine | ensemble | naive | full
//   budget.epsilon                per-task epsilon, "inf" disables noise
//   budget.delta
//   label.kind                    prior | learned (data is refused)
//   label.prior                   file of class names, one per line; the
//                                 prior of every task instead of the
//                                 stream's class schedule. Training records
//                                 of other classes are dropped.
//   label.tau, label.release_epsilon, label.release_delta
//   label.dummy_multiplier        prior label space size / scheduled classes
//   dpsgd.clip_norm, dpsgd.expected_batch, dpsgd.epochs,
//   dpsgd.learning_rate, dpsgd.random_init_empty
//   ensemble.aggregation          argmax | median
//   repeats, seed, output
//   sweep.epsilons                comma-separated, e.g. "0.5,1,inf"
//   sweep.dummy_multipliers       comma-separated, e.g. "1,10,100"
//   curve.epsilons, curve.k_max   class-loss table written next to results

#ifndef DPCL_EXPERIMENT_H_
#define DPCL_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpcl/dpsgd_ensemble.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"
#include "dpcl/metrics.h"
#include "dpcl/streams.h"
#include "json.hpp"

namespace dpcl {

enum class Method { kCosine, kEnsemble, kNaive, kFull };

std::string_view ToString(Method method);
Method ParseMethod(std::string_view name);

struct SynthParams {
  std::size_t classes = 50;
  std::size_t per_class = 40;
  std::size_t dim = 32;
  double separation = 1.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> dataset_path;
  SynthParams synth;

  std::size_t tasks = 10;
  StreamMode stream_mode = StreamMode::kDisjoint;
  double disjoint_fraction = 0.5;
  std::size_t blurry_spread = 0;
  double imbalance = 4.0;

  Method method = Method::kCosine;
  PrivacyBudget budget{1.0, 1e-5};

  LabelPolicyKind label_kind = LabelPolicyKind::kPrior;
  double label_tau = 2.0;
  double label_release_epsilon = 1.0;
  std::optional<double> label_release_delta;
  std::size_t dummy_multiplier = 1;
  std::optional<std::filesystem::path> label_prior_path;

  DpSgdConfig dpsgd;
  Aggregation aggregation = Aggregation::kArgmax;

  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output = "results";

  std::vector<double> sweep_epsilons;
  std::vector<std::size_t> sweep_dummy_multipliers;
  std::vector<double> curve_epsilons = {0.5, 1.0, 2.0};
  std::int64_t curve_k_max = 20;

  // Throws ConfigError.
  void Validate() const;
  nlohmann::json ToJson() const;
};

// Sets one key. Throws ConfigError on an unknown key or a malformed value.
void ApplySetting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Parses a config file body, applies "key=value" overrides in order and
// validates the result.
ExperimentConfig ParseConfig(std::string_view text,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides = {});

// Reads a label.prior file against `universe`. Blank lines are skipped.
// Throws ConfigError on an unreadable file, an unknown name or an empty list.
LabelSet ReadPriorFile(const std::filesystem::path& path, const LabelUniverse& universe);

struct Spread {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

// Min / median / max; the median of an even count is the mean of the two
// middle values. Throws InvalidArgument on an empty input.
Spread SpreadOf(std::vector<double> values);

struct RepeatReport {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  AccuracyMatrix acc;                 // acc[t][i], i <= t
  std::vector<double> avg_acc;        // per task
  std::vector<double> avg_forget;     // per task, NaN for the first
  std::vector<PrivacyBudget> task_budget;  // releases touching task t
  PrivacyBudget per_task_total;       // worst task, releases composed in sequence
  PrivacyBudget sequential_total;     // every release composed in sequence
  // Final model on every held-out query of the stream at once.
  double final_pooled_acc = 0.0;
  nlohmann::json ledger;
  std::vector<std::string> warnings;

  double final_avg_acc() const { return avg_acc.back(); }
};

struct MetricsReport {
  ExperimentConfig config;
  std::vector<RepeatReport> repeats;
  Spread final_avg_acc;
  std::optional<Spread> final_avg_forget;

  nlohmann::json ToJson() const;
};

// One repeat with seed cfg.seed + repeat.
RepeatReport RunRepeat(const ExperimentConfig& cfg, std::size_t repeat);

// All repeats, run concurrently. A failing repeat aborts the run with an
// Error naming the repeat index.
MetricsReport RunExperiment(const ExperimentConfig& cfg);

struct SweepPoint {
  double x = 0.0;
  Spread final_avg_acc;
};

std::vector<SweepPoint> SweepEpsilon(const ExperimentConfig& cfg,
                                     const std::vector<double>& epsilons);
std::vector<SweepPoint> SweepDummyMultiplier(const ExperimentConfig& cfg,
                                             const std::vector<std::size_t>& multipliers);

// Writes results.csv, summary.json and class_loss_curve.csv into `dir`.
void WriteResults(const MetricsReport& report, const std::filesystem::path& dir);

// CSV with columns (x_name, min, median, max).
void WriteSweep(const std::vector<SweepPoint>& points, std::string_view x_name,
                const std::filesystem::path& path);

// Runs the experiment and its sweeps and writes everything into cfg.output:
// the files of WriteResults plus accuracy_vs_epsilon.csv and
// accuracy_vs_dummy.csv when the matching sweep keys are set.
MetricsReport RunAndWrite(const ExperimentConfig& cfg);

}  // namespace dpcl

#endif  // DPCL_EXPERIMENT_H_
