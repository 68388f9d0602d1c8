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

#include "dpcl/streams.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>

#include "dpcl/errors.h"
#include "dpcl/rng.h"

namespace dpcl {
namespace {

std::vector<LabelPolicy> BroadcastPolicies(const std::vector<LabelPolicy>& policies,
                                           std::size_t num_tasks) {
  if (policies.empty()) return std::vector<LabelPolicy>(num_tasks, LabelPolicy::Data());
  if (policies.size() == 1) return std::vector<LabelPolicy>(num_tasks, policies[0]);
  if (policies.size() != num_tasks) {
    throw ConfigError("expected 1 or " + std::to_string(num_tasks) +
                      " label policies, got " + std::to_string(policies.size()));
  }
  return policies;
}

// Share of each position in a blurry window.
std::vector<double> WindowWeights(StreamMode mode, std::size_t spread,
                                  double imbalance, Rng& rng) {
  std::vector<double> w(spread, 1.0);
  if (mode != StreamMode::kSiBlurry || spread == 1) return w;
  for (std::size_t p = 0; p < spread; ++p) {
    w[p] = std::pow(imbalance, static_cast<double>(p) / static_cast<double>(spread - 1));
  }
  std::shuffle(w.begin(), w.end(), rng);
  return w;
}

}  // namespace

std::string_view ToString(StreamMode mode) {
  switch (mode) {
    case StreamMode::kDisjoint:
      return "disjoint";
    case StreamMode::kIBlurry:
      return "iblurry";
    case StreamMode::kSiBlurry:
      return "siblurry";
  }
  return "unknown";
}

StreamMode ParseStreamMode(std::string_view name) {
  if (name == "disjoint") return StreamMode::kDisjoint;
  if (name == "iblurry") return StreamMode::kIBlurry;
  if (name == "siblurry") return StreamMode::kSiBlurry;
  throw ConfigError("unknown stream mode '" + std::string(name) + "'");
}

TaskStream MakeStream(const LabeledDataset& dataset, std::size_t num_tasks,
                      StreamMode mode, const BlurryConfig& blurry,
                      const std::vector<LabelPolicy>& policies) {
  if (num_tasks == 0) throw ConfigError("a stream needs at least one task");
  if (!(blurry.disjoint_fraction >= 0.0 && blurry.disjoint_fraction <= 1.0)) {
    throw ConfigError("disjoint_fraction must lie in [0, 1]");
  }
  if (!(blurry.imbalance >= 1.0)) throw ConfigError("imbalance must be >= 1");
  const std::size_t spread =
      blurry.blurry_spread == 0 ? num_tasks : blurry.blurry_spread;
  if (spread > num_tasks) {
    throw ConfigError("blurry_spread " + std::to_string(spread) +
                      " exceeds the number of tasks " + std::to_string(num_tasks));
  }
  const EmbeddingDataset& data = dataset.data;
  data.CheckLabels(dataset.universe);

  const LabelSet present = data.Labels();
  std::vector<LabelId> classes(present.begin(), present.end());
  Rng order_rng = MakeRng(DeriveSeed(blurry.seed, 0));
  std::shuffle(classes.begin(), classes.end(), order_rng);
  const std::size_t num_classes = classes.size();

  std::size_t num_disjoint = num_classes;
  if (mode == StreamMode::kDisjoint) {
    if (num_classes % num_tasks != 0) {
      throw ConfigError("disjoint mode needs the class count (" +
                        std::to_string(num_classes) +
                        ") to be divisible by the task count (" +
                        std::to_string(num_tasks) + ")");
    }
  } else {
    num_disjoint = static_cast<std::size_t>(
        std::llround(blurry.disjoint_fraction * static_cast<double>(num_classes)));
  }
  const std::size_t num_blurry = num_classes - num_disjoint;

  // Either a fixed task or a window [start, start + spread) with weights.
  struct Placement {
    std::size_t start = 0;
    std::vector<double> weights;  // empty for disjoint classes
  };
  std::map<LabelId, Placement> placement;
  for (std::size_t j = 0; j < num_disjoint; ++j) {
    placement[classes[j]].start = j * num_tasks / num_disjoint;
  }
  for (std::size_t b = 0; b < num_blurry; ++b) {
    const LabelId label = classes[num_disjoint + b];
    Rng rng = MakeRng(DeriveSeed(blurry.seed, 1 + label.value));
    Placement p;
    p.start = std::min(b * num_tasks / num_blurry, num_tasks - spread);
    p.weights = WindowWeights(mode, spread, blurry.imbalance, rng);
    placement[label] = std::move(p);
  }

  std::vector<std::vector<std::size_t>> task_indices(num_tasks);
  std::map<LabelId, Rng> sample_rngs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LabelId label = data[i].label;
    const Placement& p = placement.at(label);
    std::size_t task = p.start;
    if (!p.weights.empty()) {
      auto [it, inserted] = sample_rngs.try_emplace(
          label, MakeRng(DeriveSeed(DeriveSeed(blurry.seed, 1 + label.value), 1)));
      std::discrete_distribution<std::size_t> pick(p.weights.begin(), p.weights.end());
      task = p.start + pick(it->second);
    }
    task_indices[task].push_back(i);
  }

  std::vector<LabelSet> scheduled(num_tasks);
  for (const auto& [label, p] : placement) {
    const std::size_t width = p.weights.empty() ? 1 : p.weights.size();
    for (std::size_t t = p.start; t < p.start + width; ++t) scheduled[t].insert(label);
  }

  const std::vector<LabelPolicy> task_policies = BroadcastPolicies(policies, num_tasks);
  TaskStream stream;
  stream.universe = dataset.universe;
  stream.dim = data.dim();
  stream.tasks.reserve(num_tasks);
  for (std::size_t t = 0; t < num_tasks; ++t) {
    stream.tasks.push_back(Task{data.Select(task_indices[t]), task_policies[t],
                                std::move(task_indices[t]), std::move(scheduled[t])});
  }
  return stream;
}

TaskStream WithPolicies(TaskStream stream, const std::vector<LabelPolicy>& policies) {
  const std::vector<LabelPolicy> task_policies =
      BroadcastPolicies(policies, stream.tasks.size());
  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    stream.tasks[t].policy = task_policies[t];
  }
  return stream;
}

std::vector<LabelSet> TaskLabelSets(const TaskStream& stream) {
  std::vector<LabelSet> out;
  out.reserve(stream.tasks.size());
  for (const Task& task : stream.tasks) out.push_back(task.data.Labels());
  return out;
}

LabeledDataset SynthMixture(std::size_t classes, std::size_t per_class,
                            std::size_t dim, double separation,
                            std::uint64_t seed) {
  if (classes == 0) throw InvalidArgument("synth_mixture needs classes >= 1");
  if (dim < 2) throw InvalidArgument("synth_mixture needs dim >= 2");
  if (!(separation > 0.0)) throw InvalidArgument("separation must be positive");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < classes; ++c) names.push_back("class_" + std::to_string(c));

  const double noise_scale =
      std::isinf(separation) ? 0.0
                             : 1.0 / (separation * std::sqrt(static_cast<double>(dim)));
  auto normalize = [](std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  };

  std::vector<Record> records;
  records.reserve(classes * per_class);
  Rng proto_rng = MakeRng(DeriveSeed(seed, 0));
  std::normal_distribution<double> proto_normal(0.0, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> proto(dim);
    double norm;
    do {
      for (double& x : proto) x = proto_normal(proto_rng);
      norm = 0.0;
      for (double x : proto) norm += x * x;
    } while (norm == 0.0);
    normalize(proto);

    Rng rng = MakeRng(DeriveSeed(seed, 1 + c));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> point = proto;
      if (noise_scale > 0.0) {
        for (double& x : point) x += noise_scale * normal(rng);
        normalize(point);
      }
      Record r;
      r.label = LabelId{static_cast<std::uint32_t>(c)};
      r.values.assign(point.begin(), point.end());
      records.push_back(std::move(r));
    }
  }
  return {EmbeddingDataset(dim, std::move(records)), LabelUniverse(std::move(names))};
}

}  // namespace dpcl
