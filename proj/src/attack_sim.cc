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

#include "dpcl/attack_sim.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpcl/errors.h"
#include "dpcl/rng.h"
#include "dpcl/streams.h"

namespace dpcl {

void GameConfig::Validate() const {
  if (trials == 0) throw InvalidArgument("the game needs at least one trial");
  if (challenge.values.size() != base_data.dim()) {
    throw InvalidArgument("challenge record has dimension " +
                          std::to_string(challenge.values.size()) + ", expected " +
                          std::to_string(base_data.dim()));
  }
  if (base_data.Labels().count(challenge.label) > 0) {
    throw InvalidArgument("challenge label " + std::to_string(challenge.label.value) +
                          " already occurs in the base data");
  }
  policy.Validate();
}

double WorldCounts::rate() const {
  return trials == 0 ? 0.0
                     : static_cast<double>(guessed_neighbour) / static_cast<double>(trials);
}

Interval WilsonInterval(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) return {};
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

GameResult RunGame(const GameConfig& cfg) {
  cfg.Validate();
  std::vector<Record> with = cfg.base_data.records();
  with.push_back(cfg.challenge);
  const EmbeddingDataset neighbour(cfg.base_data.dim(), std::move(with));

  GameResult result;
  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const bool world = (i % 2) == 1;
    const EmbeddingDataset& data = world ? neighbour : cfg.base_data;
    const ReleasedLabelSpace released =
        ResolveLabelSpace(data, cfg.policy, DeriveSeed(cfg.seed, i));
    WorldCounts& counts = world ? result.with_challenge : result.without_challenge;
    ++counts.trials;
    if (released.contains(cfg.challenge.label)) ++counts.guessed_neighbour;
  }

  result.advantage =
      std::abs(result.with_challenge.rate() - result.without_challenge.rate());
  const Interval w1 = WilsonInterval(result.with_challenge.guessed_neighbour,
                                     result.with_challenge.trials);
  const Interval w0 = WilsonInterval(result.without_challenge.guessed_neighbour,
                                     result.without_challenge.trials);
  const double lo = std::max(w1.low - w0.high, w0.low - w1.high);
  result.ci_low = std::max(0.0, lo);
  result.ci_high = std::min(1.0, std::max(w1.high - w0.low, w0.high - w1.low));
  result.ci_low = std::min(result.ci_low, result.advantage);
  result.ci_high = std::max(result.ci_high, result.advantage);
  return result;
}

GameConfig SyntheticGame(LabelPolicy policy, std::uint64_t trials, std::uint64_t seed,
                         std::size_t base_classes, std::size_t per_class,
                         std::size_t dim) {
  const LabeledDataset mix =
      SynthMixture(base_classes + 1, per_class, dim, 4.0, DeriveSeed(seed, 0));
  const LabelId novel{static_cast<std::uint32_t>(base_classes)};
  GameConfig cfg;
  std::vector<Record> base;
  for (const Record& r : mix.data.records()) {
    if (r.label == novel) {
      if (cfg.challenge.values.empty()) cfg.challenge = r;
    } else {
      base.push_back(r);
    }
  }
  cfg.base_data = EmbeddingDataset(dim, std::move(base));
  if (policy.kind == LabelPolicyKind::kPrior) {
    LabelSet all;
    for (std::size_t c = 0; c <= base_classes; ++c) {
      all.insert(LabelId{static_cast<std::uint32_t>(c)});
    }
    policy.prior = std::move(all);
  }
  cfg.policy = std::move(policy);
  cfg.trials = trials;
  cfg.seed = seed;
  return cfg;
}

nlohmann::json GameReport(const GameConfig& cfg, const GameResult& result) {
  return {{"policy", ToString(cfg.policy.kind)},
          {"trials", cfg.trials},
          {"advantage", result.advantage},
          {"ci_low", result.ci_low},
          {"ci_high", result.ci_high},
          {"release_rate", result.with_challenge.rate()}};
}

}  // namespace dpcl
