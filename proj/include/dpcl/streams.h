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

#ifndef DPCL_STREAMS_H_
#define DPCL_STREAMS_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dpcl/datasets.h"
#include "dpcl/label_space.h"

namespace dpcl {

enum class StreamMode { kDisjoint, kIBlurry, kSiBlurry };

std::string_view ToString(StreamMode mode);
StreamMode ParseStreamMode(std::string_view name);

// Parameters of the blurry stream generators.
//
// A `disjoint_fraction` of the classes is assigned wholly to one task, as in
// disjoint mode. Every other class is spread over `blurry_spread` consecutive
// tasks; each of its samples picks a task of that window at random. In
// kSiBlurry the per-task shares inside the window are geometric weights
// from 1 to `imbalance`, shuffled per class; in kIBlurry they are uniform.
struct BlurryConfig {
  double disjoint_fraction = 0.5;
  std::size_t blurry_spread = 0;  // 0 means "all tasks"
  double imbalance = 4.0;
  std::uint64_t seed = 0;
};

struct Task {
  EmbeddingDataset data;
  LabelPolicy policy;
  // Positions of `data`'s records in the source dataset, ascending.
  std::vector<std::size_t> source_indices;
  // Classes the stream design places in this task (a disjoint class in its
  // task, a blurry class in every task of its window). Fixed by the stream
  // parameters and seed, not by the sampled records.
  LabelSet scheduled;
};

struct TaskStream {
  std::vector<Task> tasks;
  LabelUniverse universe;
  std::size_t dim = 0;

  std::size_t size() const { return tasks.size(); }
};

// Partitions `dataset` into `num_tasks` tasks. `policies` holds one policy
// per task, a single policy used for every task, or nothing (s_data
// placeholders, to be replaced with WithPolicies). The class order is a
// seeded permutation of the labels present in the data.
TaskStream MakeStream(const LabeledDataset& dataset, std::size_t num_tasks,
                      StreamMode mode, const BlurryConfig& blurry,
                      const std::vector<LabelPolicy>& policies = {});

// Same stream with the policies replaced (same broadcast rules).
TaskStream WithPolicies(TaskStream stream,
                        const std::vector<LabelPolicy>& policies);

// Labels present in each task, in task order.
std::vector<LabelSet> TaskLabelSets(const TaskStream& stream);

// Deterministic mixture of `classes` unit-norm prototypes in R^dim. Each
// point is its prototype plus isotropic Gaussian noise of total expected norm
// about 1/separation, renormalized to unit length. Records are class-major.
// separation = +inf reproduces the prototypes exactly.
LabeledDataset SynthMixture(std::size_t classes, std::size_t per_class,
                            std::size_t dim, double separation,
                            std::uint64_t seed);

}  // namespace dpcl

#endif  // DPCL_STREAMS_H_
