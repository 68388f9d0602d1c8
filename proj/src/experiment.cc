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

#include "dpcl/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include "dpcl/accountant.h"
#include "dpcl/cosine_classifier.h"
#include "dpcl/emb1.h"
#include "dpcl/errors.h"
#include "dpcl/rng.h"

namespace dpcl {
namespace {

constexpr double kQueryFraction = 0.2;
constexpr std::string_view kSharedScope = "all-tasks";

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double ParseDouble(std::string_view key, std::string_view text) {
  const std::string v = Trim(text);
  if (v == "inf" || v == "+inf" || v == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) {
    throw ConfigError(std::string(key) + ": '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t ParseUnsigned(std::string_view key, std::string_view text) {
  const std::string v = Trim(text);
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) {
    throw ConfigError(std::string(key) + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool ParseBool(std::string_view key, std::string_view text) {
  const std::string v = Trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": '" + v + "' is not a boolean");
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json Number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string Format(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

nlohmann::json BudgetJson(const PrivacyBudget& b) {
  return {{"epsilon", Number(b.epsilon)}, {"delta", b.delta}};
}

nlohmann::json SpreadJson(const Spread& s) {
  return {{"min", s.min}, {"median", s.median}, {"max", s.max}};
}

std::string TaskScope(std::size_t t) { return "task-" + std::to_string(t + 1); }

template <typename Predict>
double Accuracy(const std::vector<Record>& queries, Predict&& predict) {
  if (queries.empty()) return 0.0;
  std::size_t correct = 0;
  std::vector<double> x;
  for (const Record& q : queries) {
    x.assign(q.values.begin(), q.values.end());
    try {
      if (predict(std::span<const double>(x)) == q.label) ++correct;
    } catch (const NoClasses&) {
      // Nothing released yet: every query counts as wrong.
    }
  }
  return static_cast<double>(correct) / static_cast<double>(queries.size());
}

LabeledDataset LoadSource(const ExperimentConfig& cfg) {
  if (cfg.dataset_path) return LoadEmbeddings(*cfg.dataset_path);
  return SynthMixture(cfg.synth.classes, cfg.synth.per_class, cfg.synth.dim,
                      cfg.synth.separation, cfg.synth.seed);
}

// Per-class holdout, fixed by the seed alone so that every stream layout of
// the same data trains on the same records.
std::vector<bool> QueryMask(const EmbeddingDataset& data, std::uint64_t seed) {
  std::map<LabelId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  std::vector<bool> mask(data.size(), false);
  for (auto& [label, idx] : by_class) {
    Rng rng = MakeRng(DeriveSeed(seed, label.value));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_query = static_cast<std::size_t>(
        std::llround(kQueryFraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < n_query; ++j) mask[idx[j]] = true;
  }
  return mask;
}

struct DpSgdPlan {
  DpSgdConfig cfg;
  std::size_t n = 0;
};

DpSgdPlan PlanDpSgd(const DpSgdConfig& base, const PrivacyBudget& budget,
                    std::size_t n, std::uint64_t seed) {
  DpSgdPlan plan{base, n};
  plan.cfg.seed = seed;
  if (n == 0 || std::isinf(budget.epsilon)) {
    plan.cfg.noise_multiplier = 0.0;
    return plan;
  }
  const std::size_t batch = std::min(base.expected_batch, n);
  const double q = static_cast<double>(batch) / static_cast<double>(n);
  const auto steps = static_cast<std::int64_t>(base.epochs * ((n + batch - 1) / batch));
  plan.cfg.expected_batch = batch;
  plan.cfg.noise_multiplier =
      CalibrateNoiseMultiplier(budget.epsilon, q, steps, budget.delta);
  return plan;
}

std::size_t CountReleased(const EmbeddingDataset& data, const LabelSet& labels) {
  std::size_t n = 0;
  for (const Record& r : data.records()) n += labels.count(r.label);
  return n;
}

TaskStream WithTaskData(TaskStream stream, const std::vector<EmbeddingDataset>& data) {
  for (std::size_t t = 0; t < stream.size(); ++t) {
    stream.tasks[t].data = data[t];
    stream.tasks[t].source_indices.clear();
  }
  return stream;
}

}  // namespace

std::string_view ToString(Method method) {
  switch (method) {
    case Method::kCosine:
      return "cosine";
    case Method::kEnsemble:
      return "ensemble";
    case Method::kNaive:
      return "naive";
    case Method::kFull:
      return "full";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  if (name == "cosine") return Method::kCosine;
  if (name == "ensemble") return Method::kEnsemble;
  if (name == "naive") return Method::kNaive;
  if (name == "full") return Method::kFull;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::Validate() const {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (tasks < 1) throw ConfigError("stream.tasks must be >= 1");
  if (!(budget.epsilon > 0.0)) throw ConfigError("budget.epsilon must be positive");
  if (!(budget.delta > 0.0 && budget.delta < 1.0)) {
    throw ConfigError("budget.delta must lie in (0, 1)");
  }
  if (dummy_multiplier < 1) throw ConfigError("label.dummy_multiplier must be >= 1");
  switch (label_kind) {
    case LabelPolicyKind::kData:
      throw ConfigError(
          "label.kind = data releases the label space without privacy; use prior or "
          "learned");
    case LabelPolicyKind::kLearned:
      if (dummy_multiplier != 1) {
        throw ConfigError("label.dummy_multiplier only applies to label.kind = prior");
      }
      if (label_prior_path) {
        throw ConfigError("label.prior only applies to label.kind = prior");
      }
      try {
        LabelPolicy::Learned(label_tau, label_release_epsilon, label_release_delta)
            .Validate();
      } catch (const Error& e) {
        throw ConfigError(std::string("label policy: ") + e.what());
      }
      break;
    case LabelPolicyKind::kPrior:
      break;
  }
  if (!dataset_path) {
    if (synth.classes < 1 || synth.per_class < 1 || synth.dim < 2 ||
        !(synth.separation > 0.0)) {
      throw ConfigError("synth.* parameters out of range");
    }
  }
  if (!(disjoint_fraction >= 0.0 && disjoint_fraction <= 1.0)) {
    throw ConfigError("stream.disjoint_fraction must lie in [0, 1]");
  }
  if (blurry_spread > tasks) throw ConfigError("stream.blurry_spread exceeds stream.tasks");
  if (!(imbalance >= 1.0)) throw ConfigError("stream.imbalance must be >= 1");
  try {
    dpsgd.Validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("dpsgd: ") + e.what());
  }
  for (double e : sweep_epsilons) {
    if (!(e > 0.0)) throw ConfigError("sweep.epsilons must be positive");
  }
  for (std::size_t m : sweep_dummy_multipliers) {
    if (m < 1) throw ConfigError("sweep.dummy_multipliers must be >= 1");
  }
  if (curve_k_max < 1) throw ConfigError("curve.k_max must be >= 1");
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  if (dataset_path) {
    j["dataset.path"] = dataset_path->string();
  } else {
    j["synth.classes"] = synth.classes;
    j["synth.per_class"] = synth.per_class;
    j["synth.dim"] = synth.dim;
    j["synth.separation"] = Number(synth.separation);
    j["synth.seed"] = synth.seed;
  }
  j["stream.tasks"] = tasks;
  j["stream.mode"] = ToString(stream_mode);
  j["stream.disjoint_fraction"] = disjoint_fraction;
  j["stream.blurry_spread"] = blurry_spread;
  j["stream.imbalance"] = imbalance;
  j["method"] = ToString(method);
  j["budget.epsilon"] = Number(budget.epsilon);
  j["budget.delta"] = budget.delta;
  j["label.kind"] = ToString(label_kind);
  j["label.tau"] = label_tau;
  j["label.release_epsilon"] = Number(label_release_epsilon);
  j["label.release_delta"] =
      label_release_delta ? nlohmann::json(*label_release_delta) : nlohmann::json();
  j["label.dummy_multiplier"] = dummy_multiplier;
  j["label.prior"] =
      label_prior_path ? nlohmann::json(label_prior_path->string()) : nlohmann::json();
  j["dpsgd.clip_norm"] = dpsgd.clip_norm;
  j["dpsgd.expected_batch"] = dpsgd.expected_batch;
  j["dpsgd.epochs"] = dpsgd.epochs;
  j["dpsgd.learning_rate"] = dpsgd.learning_rate;
  j["dpsgd.random_init_empty"] = dpsgd.random_init_empty;
  j["ensemble.aggregation"] = ToString(aggregation);
  j["repeats"] = repeats;
  j["seed"] = seed;
  j["output"] = output.string();
  nlohmann::json eps = nlohmann::json::array();
  for (double e : sweep_epsilons) eps.push_back(Number(e));
  j["sweep.epsilons"] = eps;
  j["sweep.dummy_multipliers"] = sweep_dummy_multipliers;
  nlohmann::json curve = nlohmann::json::array();
  for (double e : curve_epsilons) curve.push_back(Number(e));
  j["curve.epsilons"] = curve;
  j["curve.k_max"] = curve_k_max;
  return j;
}

void ApplySetting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const std::string v = Trim(value);
  try {
    if (key == "dataset.path") {
      cfg.dataset_path = v.empty() ? std::nullopt
                                   : std::optional<std::filesystem::path>(v);
    } else if (key == "synth.classes") {
      cfg.synth.classes = ParseUnsigned(key, v);
    } else if (key == "synth.per_class") {
      cfg.synth.per_class = ParseUnsigned(key, v);
    } else if (key == "synth.dim") {
      cfg.synth.dim = ParseUnsigned(key, v);
    } else if (key == "synth.separation") {
      cfg.synth.separation = ParseDouble(key, v);
    } else if (key == "synth.seed") {
      cfg.synth.seed = ParseUnsigned(key, v);
    } else if (key == "stream.tasks") {
      cfg.tasks = ParseUnsigned(key, v);
    } else if (key == "stream.mode") {
      cfg.stream_mode = ParseStreamMode(v);
    } else if (key == "stream.disjoint_fraction") {
      cfg.disjoint_fraction = ParseDouble(key, v);
    } else if (key == "stream.blurry_spread") {
      cfg.blurry_spread = ParseUnsigned(key, v);
    } else if (key == "stream.imbalance") {
      cfg.imbalance = ParseDouble(key, v);
    } else if (key == "method") {
      cfg.method = ParseMethod(v);
    } else if (key == "budget.epsilon") {
      cfg.budget.epsilon = ParseDouble(key, v);
    } else if (key == "budget.delta") {
      cfg.budget.delta = ParseDouble(key, v);
    } else if (key == "label.kind") {
      cfg.label_kind = ParseLabelPolicyKind(v);
    } else if (key == "label.tau") {
      cfg.label_tau = ParseDouble(key, v);
    } else if (key == "label.release_epsilon") {
      cfg.label_release_epsilon = ParseDouble(key, v);
    } else if (key == "label.release_delta") {
      cfg.label_release_delta =
          v.empty() ? std::nullopt : std::optional<double>(ParseDouble(key, v));
    } else if (key == "label.prior") {
      cfg.label_prior_path = v.empty() ? std::nullopt
                                       : std::optional<std::filesystem::path>(v);
    } else if (key == "label.dummy_multiplier") {
      cfg.dummy_multiplier = ParseUnsigned(key, v);
    } else if (key == "dpsgd.clip_norm") {
      cfg.dpsgd.clip_norm = ParseDouble(key, v);
    } else if (key == "dpsgd.expected_batch") {
      cfg.dpsgd.expected_batch = ParseUnsigned(key, v);
    } else if (key == "dpsgd.epochs") {
      cfg.dpsgd.epochs = ParseUnsigned(key, v);
    } else if (key == "dpsgd.learning_rate") {
      cfg.dpsgd.learning_rate = ParseDouble(key, v);
    } else if (key == "dpsgd.random_init_empty") {
      cfg.dpsgd.random_init_empty = ParseBool(key, v);
    } else if (key == "ensemble.aggregation") {
      cfg.aggregation = ParseAggregation(v);
    } else if (key == "repeats") {
      cfg.repeats = ParseUnsigned(key, v);
    } else if (key == "seed") {
      cfg.seed = ParseUnsigned(key, v);
    } else if (key == "output") {
      cfg.output = v;
    } else if (key == "sweep.epsilons") {
      cfg.sweep_epsilons.clear();
      for (const std::string& item : SplitList(v)) {
        cfg.sweep_epsilons.push_back(ParseDouble(key, item));
      }
    } else if (key == "sweep.dummy_multipliers") {
      cfg.sweep_dummy_multipliers.clear();
      for (const std::string& item : SplitList(v)) {
        cfg.sweep_dummy_multipliers.push_back(ParseUnsigned(key, item));
      }
    } else if (key == "curve.epsilons") {
      cfg.curve_epsilons.clear();
      for (const std::string& item : SplitList(v)) {
        cfg.curve_epsilons.push_back(ParseDouble(key, item));
      }
    } else if (key == "curve.k_max") {
      cfg.curve_k_max = static_cast<std::int64_t>(ParseUnsigned(key, v));
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

ExperimentConfig ParseConfig(std::string_view text,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  auto apply_line = [&cfg](std::string_view line, const std::string& where) {
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') return;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value, got '" + trimmed + "'");
    }
    ApplySetting(cfg, Trim(std::string_view(trimmed).substr(0, eq)),
                 std::string_view(trimmed).substr(eq + 1));
  };
  std::istringstream in{std::string(text)};
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) apply_line(line, "line " + std::to_string(n));
  for (const std::string& o : overrides) apply_line(o, "override '" + o + "'");
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return ParseConfig(text, overrides);
}

LabelSet ReadPriorFile(const std::filesystem::path& path, const LabelUniverse& universe) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read label.prior '" + path.string() + "'");
  LabelSet prior;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::optional<LabelId> id = universe.find(line);
    if (!id) throw ConfigError("label.prior names unknown class '" + line + "'");
    prior.insert(*id);
  }
  if (prior.empty()) throw ConfigError("label.prior '" + path.string() + "' is empty");
  return prior;
}

Spread SpreadOf(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("spread of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median =
      n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return {values.front(), median, values.back()};
}

RepeatReport RunRepeat(const ExperimentConfig& cfg, std::size_t repeat) {
  cfg.Validate();
  RepeatReport report;
  report.repeat = repeat;
  report.seed = cfg.seed + repeat;
  const std::uint64_t rs = report.seed;
  const std::size_t T = cfg.tasks;

  LabeledDataset source = LoadSource(cfg);
  BlurryConfig blurry{cfg.disjoint_fraction, cfg.blurry_spread, cfg.imbalance,
                      DeriveSeed(rs, 1)};
  TaskStream stream = MakeStream(source, T, cfg.stream_mode, blurry);
  const std::vector<bool> is_query = QueryMask(source.data, DeriveSeed(rs, 2));

  std::vector<EmbeddingDataset> train;
  std::vector<std::vector<Record>> queries(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Record> kept;
    for (std::size_t k = 0; k < stream.tasks[t].source_indices.size(); ++k) {
      const Record& r = stream.tasks[t].data[k];
      if (is_query[stream.tasks[t].source_indices[k]]) {
        queries[t].push_back(r);
      } else {
        kept.push_back(r);
      }
    }
    train.emplace_back(stream.dim, std::move(kept));
  }

  // Label policies: the prior file or the stream's public class schedule,
  // padded with dummies.
  std::vector<LabelPolicy> policies;
  if (cfg.label_kind == LabelPolicyKind::kPrior) {
    std::optional<LabelSet> fixed;
    if (cfg.label_prior_path) {
      fixed = ReadPriorFile(*cfg.label_prior_path, source.universe);
      RemapTable table;
      for (LabelId l : source.data.Labels()) {
        if (fixed->contains(l)) {
          table.Map(l, l);
        } else {
          table.Drop(l);
        }
      }
      for (EmbeddingDataset& d : train) d = RemapTask(d, table);
    }
    std::size_t next_dummy = source.universe.size();
    std::size_t total_dummies = 0;
    for (std::size_t t = 0; t < T; ++t) {
      LabelSet prior = fixed ? *fixed : stream.tasks[t].scheduled;
      const std::size_t extra = (cfg.dummy_multiplier - 1) * prior.size();
      for (std::size_t j = 0; j < extra; ++j) {
        prior.insert(LabelId{static_cast<std::uint32_t>(next_dummy++)});
      }
      total_dummies += extra;
      policies.push_back(LabelPolicy::Prior(std::move(prior)));
    }
    stream.universe = source.universe.WithDummies(total_dummies);
  } else {
    policies.assign(T, LabelPolicy::Learned(cfg.label_tau, cfg.label_release_epsilon,
                                            cfg.label_release_delta));
  }

  std::vector<ReleasedLabelSpace> released;
  for (std::size_t t = 0; t < T; ++t) {
    released.push_back(
        ResolveLabelSpace(train[t], policies[t], DeriveSeed(DeriveSeed(rs, 3), t)));
  }

  // Ledger.
  PrivacyLedger ledger(CompositionMode::kSequentialBasic);
  const bool shared = cfg.method == Method::kFull;
  for (std::size_t t = 0; t < T; ++t) {
    if (!shared) {
      ledger = ledger.RecordRelease({static_cast<int>(t + 1), cfg.budget, TaskScope(t)});
    }
    if (cfg.label_kind == LabelPolicyKind::kLearned) {
      const LearnedReleaseBound bound =
          LearnedReleaseDelta(cfg.label_release_epsilon, cfg.label_tau, 1);
      if (!(bound.delta < 1.0)) {
        throw ConfigError("label release with tau = " + Format(cfg.label_tau) +
                          " and epsilon = " + Format(cfg.label_release_epsilon) +
                          " has no delta below 1");
      }
      double delta = bound.delta;
      if (cfg.label_release_delta) {
        if (*cfg.label_release_delta < bound.delta) {
          throw ConfigError("label.release_delta is below the delta the label release "
                            "needs (" + Format(bound.delta) + ")");
        }
        delta = *cfg.label_release_delta;
      }
      ledger = ledger.RecordRelease(
          {static_cast<int>(t + 1), {cfg.label_release_epsilon, delta}, TaskScope(t)});
    }
  }
  if (shared) {
    ledger = ledger.RecordRelease(
        {static_cast<int>(T), cfg.budget, std::string(kSharedScope)});
  }
  PrivacyLedger per_task(CompositionMode::kParallel);
  for (std::size_t t = 0; t < T; ++t) {
    PrivacyLedger scope_ledger(CompositionMode::kSequentialBasic);
    for (const ReleaseRecord& r : ledger.records()) {
      if (r.unit_scope == TaskScope(t) || r.unit_scope == kSharedScope) {
        scope_ledger = scope_ledger.RecordRelease(r);
      }
    }
    report.task_budget.push_back(scope_ledger.Total());
    per_task = per_task.RecordRelease(
        {static_cast<int>(t + 1), report.task_budget.back(), TaskScope(t)});
  }
  report.per_task_total = per_task.Total();
  report.sequential_total = ledger.Total();
  report.ledger = ledger.ToJson();
  report.ledger["per_task"] = per_task.ToJson();

  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  std::size_t total_train = 0;
  for (const EmbeddingDataset& d : train) {
    smallest = std::min(smallest, d.size());
    total_train += d.size();
  }
  const std::size_t unit_count = shared ? total_train : smallest;
  if (unit_count > 0 && cfg.budget.delta >= 1.0 / static_cast<double>(unit_count)) {
    report.warnings.push_back("budget.delta = " + Format(cfg.budget.delta) +
                              " is not below 1/N for N = " + std::to_string(unit_count) +
                              " training records");
  }

  // Training and evaluation.
  report.acc.assign(T, {});
  std::vector<Record> all_queries;
  for (const auto& q : queries) all_queries.insert(all_queries.end(), q.begin(), q.end());
  const std::uint64_t train_seed = DeriveSeed(rs, 5);

  auto evaluate = [&](std::size_t t, auto&& predict) {
    for (std::size_t i = 0; i <= t; ++i) {
      report.acc[t].push_back(Accuracy(queries[i], predict));
    }
    if (t + 1 == T) report.final_pooled_acc = Accuracy(all_queries, predict);
  };

  switch (cfg.method) {
    case Method::kCosine: {
      const GaussianParams params =
          std::isinf(cfg.budget.epsilon) ? GaussianParams{0.0, 1.0}
                                         : CalibrateGaussian(cfg.budget, 1.0);
      ClassSumTable table(stream.dim);
      for (std::size_t t = 0; t < T; ++t) {
        table = UpdateSums(table, train[t], released[t], params,
                           DeriveSeed(DeriveSeed(rs, 4), t))
                    .table;
        const CosineIndex index(table);
        evaluate(t, [&](std::span<const double> x) { return index.Predict(x); });
      }
      break;
    }
    case Method::kEnsemble: {
      Ensemble ensemble{{}, cfg.aggregation};
      for (std::size_t t = 0; t < T; ++t) {
        const DpSgdPlan plan =
            PlanDpSgd(cfg.dpsgd, cfg.budget, CountReleased(train[t], released[t].labels),
                      DeriveSeed(train_seed, t));
        ensemble.heads.push_back(TrainHead(train[t], released[t], plan.cfg).head);
        evaluate(t, [&](std::span<const double> x) { return PredictEnsemble(ensemble, x); });
      }
      break;
    }
    case Method::kNaive: {
      LinearHead head = LinearHead::Zeros({}, stream.dim);
      for (std::size_t t = 0; t < T; ++t) {
        head = head.Extended(released[t].labels);
        const DpSgdPlan plan =
            PlanDpSgd(cfg.dpsgd, cfg.budget, CountReleased(train[t], released[t].labels),
                      DeriveSeed(train_seed, t));
        std::vector<Record> usable;
        for (const Record& r : train[t].records()) {
          if (released[t].contains(r.label)) usable.push_back(r);
        }
        head = ContinueTraining(head, EmbeddingDataset(stream.dim, std::move(usable)),
                                plan.cfg)
                   .head;
        evaluate(t, [&](std::span<const double> x) { return head.Predict(x); });
      }
      break;
    }
    case Method::kFull: {
      std::size_t n = 0;
      for (std::size_t t = 0; t < T; ++t) n += CountReleased(train[t], released[t].labels);
      const DpSgdPlan plan = PlanDpSgd(cfg.dpsgd, cfg.budget, n, train_seed);
      const LinearHead head = TrainFull(WithTaskData(stream, train), released, plan.cfg).head;
      for (std::size_t t = 0; t < T; ++t) {
        evaluate(t, [&](std::span<const double> x) { return head.Predict(x); });
      }
      break;
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    report.avg_acc.push_back(AverageAccuracy(report.acc[t], t + 1));
    report.avg_forget.push_back(t == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : AverageForgetting(report.acc, t + 1));
  }
  return report;
}

MetricsReport RunExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.dataset_path) InspectEmbeddings(*cfg.dataset_path);
  MetricsReport report;
  report.config = cfg;
  std::vector<std::future<RepeatReport>> jobs;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    jobs.push_back(std::async(std::launch::async, [&cfg, r] { return RunRepeat(cfg, r); }));
  }
  for (std::size_t r = 0; r < jobs.size(); ++r) {
    try {
      report.repeats.push_back(jobs[r].get());
    } catch (const std::exception& e) {
      for (std::size_t k = r + 1; k < jobs.size(); ++k) {
        try {
          jobs[k].wait();
        } catch (...) {
        }
      }
      throw Error("repeat " + std::to_string(r) + " (seed " +
                  std::to_string(cfg.seed + r) + "): " + e.what());
    }
  }
  std::vector<double> finals;
  std::vector<double> forgets;
  for (const RepeatReport& r : report.repeats) {
    finals.push_back(r.final_avg_acc());
    if (cfg.tasks >= 2) forgets.push_back(r.avg_forget.back());
  }
  report.final_avg_acc = SpreadOf(finals);
  if (!forgets.empty()) report.final_avg_forget = SpreadOf(forgets);
  return report;
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json reps = nlohmann::json::array();
  for (const RepeatReport& r : repeats) {
    nlohmann::json forget = nlohmann::json::array();
    for (double f : r.avg_forget) forget.push_back(Number(f));
    nlohmann::json budgets = nlohmann::json::array();
    for (const PrivacyBudget& b : r.task_budget) budgets.push_back(BudgetJson(b));
    reps.push_back({{"repeat", r.repeat},
                    {"seed", r.seed},
                    {"acc", r.acc},
                    {"average_accuracy", r.avg_acc},
                    {"average_forgetting", forget},
                    {"final_average_accuracy", r.final_avg_acc()},
                    {"final_pooled_accuracy", r.final_pooled_acc},
                    {"task_budget", budgets},
                    {"per_task_total", BudgetJson(r.per_task_total)},
                    {"sequential_total", BudgetJson(r.sequential_total)},
                    {"ledger", r.ledger},
                    {"warnings", r.warnings}});
  }
  return {{"config", config.ToJson()},
          {"final_average_accuracy", SpreadJson(final_avg_acc)},
          {"final_average_forgetting",
           final_avg_forget ? SpreadJson(*final_avg_forget) : nlohmann::json()},
          {"repeats", reps}};
}

std::vector<SweepPoint> SweepEpsilon(const ExperimentConfig& cfg,
                                     const std::vector<double>& epsilons) {
  std::vector<SweepPoint> out;
  for (double e : epsilons) {
    ExperimentConfig c = cfg;
    c.budget.epsilon = e;
    out.push_back({e, RunExperiment(c).final_avg_acc});
  }
  return out;
}

std::vector<SweepPoint> SweepDummyMultiplier(const ExperimentConfig& cfg,
                                             const std::vector<std::size_t>& multipliers) {
  std::vector<SweepPoint> out;
  for (std::size_t m : multipliers) {
    ExperimentConfig c = cfg;
    c.dummy_multiplier = m;
    out.push_back({static_cast<double>(m), RunExperiment(c).final_avg_acc});
  }
  return out;
}

void WriteResults(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "results.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write '" + (dir / "results.csv").string() + "'");
  csv << "repeat,task,method,epsilon,delta,acc,avg_acc,avg_forget\n";
  for (const RepeatReport& r : report.repeats) {
    for (std::size_t t = 0; t < r.acc.size(); ++t) {
      csv << r.repeat << ',' << (t + 1) << ',' << ToString(report.config.method) << ','
          << Format(r.task_budget[t].epsilon) << ',' << Format(r.task_budget[t].delta)
          << ',' << Format(r.acc[t][t]) << ',' << Format(r.avg_acc[t]) << ','
          << Format(r.avg_forget[t]) << '\n';
    }
  }

  std::ofstream summary(dir / "summary.json", std::ios::trunc);
  if (!summary) throw IoError("cannot write '" + (dir / "summary.json").string() + "'");
  summary << report.ToJson().dump(2) << '\n';

  std::ofstream curve(dir / "class_loss_curve.csv", std::ios::trunc);
  if (!curve) throw IoError("cannot write '" + (dir / "class_loss_curve.csv").string() + "'");
  curve << "epsilon,delta,k,drop_probability\n";
  for (const ClassLossPoint& p : ClassLossCurve(report.config.curve_epsilons,
                                                report.config.budget.delta,
                                                report.config.curve_k_max)) {
    curve << Format(p.epsilon) << ',' << Format(report.config.budget.delta) << ','
          << p.k << ',' << Format(p.drop_probability) << '\n';
  }
}

void WriteSweep(const std::vector<SweepPoint>& points, std::string_view x_name,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << x_name << ",min,median,max\n";
  for (const SweepPoint& p : points) {
    out << Format(p.x) << ',' << Format(p.final_avg_acc.min) << ','
        << Format(p.final_avg_acc.median) << ',' << Format(p.final_avg_acc.max) << '\n';
  }
}

MetricsReport RunAndWrite(const ExperimentConfig& cfg) {
  MetricsReport report = RunExperiment(cfg);
  WriteResults(report, cfg.output);
  if (!cfg.sweep_epsilons.empty()) {
    WriteSweep(SweepEpsilon(cfg, cfg.sweep_epsilons), "epsilon",
               cfg.output / "accuracy_vs_epsilon.csv");
  }
  if (!cfg.sweep_dummy_multipliers.empty()) {
    WriteSweep(SweepDummyMultiplier(cfg, cfg.sweep_dummy_multipliers), "dummy_multiplier",
               cfg.output / "accuracy_vs_dummy.csv");
  }
  return report;
}

}  // namespace dpcl
