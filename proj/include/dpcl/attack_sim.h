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

// Label-space distinguishing game.
//
// The adversary sees only the released output label space of one task and
// must tell D from D' = D + {(x*, y*)}, where y* is a label absent from D.
// It guesses "D'" exactly when y* was released.

#ifndef DPCL_ATTACK_SIM_H_
#define DPCL_ATTACK_SIM_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpcl/datasets.h"
#include "dpcl/label_space.h"
#include "json.hpp"

namespace dpcl {

struct GameConfig {
  EmbeddingDataset base_data{1};
  Record challenge;  // label must not occur in base_data
  LabelPolicy policy;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on zero trials, a challenge of the wrong
  // dimension, or a challenge label already present in base_data.
  void Validate() const;
};

struct WorldCounts {
  std::uint64_t trials = 0;
  std::uint64_t guessed_neighbour = 0;  // y* was released

  double rate() const;
};

struct GameResult {
  // |Pr[guess D' | D'] - Pr[guess D' | D]|
  double advantage = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  WorldCounts without_challenge;  // world 0: D
  WorldCounts with_challenge;     // world 1: D'
};

// Wilson score interval at 95%. Returns {0, 1} when n = 0.
struct Interval {
  double low = 0.0;
  double high = 1.0;
};
Interval WilsonInterval(std::uint64_t successes, std::uint64_t n);

// Trials alternate worlds (even trial: D, odd trial: D'), so the two worlds
// are exactly balanced. Trial i resolves the label space with a seed derived
// from (seed, i). The advantage interval combines the two per-world Wilson
// intervals.
GameResult RunGame(const GameConfig& cfg);

// Game on a synthetic mixture: the base data holds `base_classes` classes of
// `per_class` points, the challenge is one point of an extra class. A prior
// policy gets every label including the challenge's, whatever `policy.prior`
// holds.
GameConfig SyntheticGame(LabelPolicy policy, std::uint64_t trials, std::uint64_t seed,
                         std::size_t base_classes = 5, std::size_t per_class = 20,
                         std::size_t dim = 8);

// {policy, trials, advantage, ci_low, ci_high, release_rate}
nlohmann::json GameReport(const GameConfig& cfg, const GameResult& result);

}  // namespace dpcl

#endif  // DPCL_ATTACK_SIM_H_
