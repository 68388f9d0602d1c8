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

// Output label space policies.
//
// A classifier released for task t can only predict labels from its output
// label space O_t, so O_t is itself released. Three policies decide it:
//
//   kData     O_t is the set of labels present in the task data. Not DP: an
//             adjacent dataset with one record of a novel label changes O_t
//             deterministically. Only exists as a negative control.
//   kPrior    O_t is a public, data-independent label set. Records whose
//             label falls outside it are remapped or dropped beforehand.
//   kLearned  O_t is chosen per label by a noisy-count threshold test:
//             y is released iff |D_y| + Lap(1/eps) > tau.
//
// There is no pure epsilon-DP way to release a data-dependent label set (a
// novel label must be released with probability zero on the neighbouring
// dataset), so kLearned always carries a delta > 0.

#ifndef DPCL_LABEL_SPACE_H_
#define DPCL_LABEL_SPACE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "dpcl/datasets.h"

namespace dpcl {

// Maps each source label to a target label or to nullopt (drop).
class RemapTable {
 public:
  RemapTable() = default;

  void Map(LabelId from, LabelId to) { entries_[from] = to; }
  void Drop(LabelId from) { entries_[from] = std::nullopt; }

  static RemapTable Identity(const LabelSet& labels);

  bool contains(LabelId from) const { return entries_.count(from) > 0; }
  const std::map<LabelId, std::optional<LabelId>>& entries() const {
    return entries_;
  }

  // Throws MappingError when a non-drop target is not in `prior`.
  void CheckTargets(const LabelSet& prior) const;

 private:
  std::map<LabelId, std::optional<LabelId>> entries_;
};

enum class LabelPolicyKind { kData, kPrior, kLearned };

std::string_view ToString(LabelPolicyKind kind);
LabelPolicyKind ParseLabelPolicyKind(std::string_view name);

struct LabelPolicy {
  LabelPolicyKind kind = LabelPolicyKind::kData;
  std::optional<LabelSet> prior;        // kPrior
  std::optional<RemapTable> remap;      // kPrior, optional
  std::optional<double> threshold_tau;  // kLearned
  std::optional<double> release_epsilon;
  // Optional delta the caller is willing to spend on the label release.
  std::optional<double> release_delta;

  static LabelPolicy Data();
  static LabelPolicy Prior(LabelSet prior,
                           std::optional<RemapTable> remap = std::nullopt);
  // Throws Unsupported if release_delta is exactly 0.
  static LabelPolicy Learned(double tau, double release_epsilon,
                             std::optional<double> release_delta = std::nullopt);

  // Throws InvalidArgument when required fields are missing or out of range,
  // Unsupported for a learned policy asking for delta = 0.
  void Validate() const;
};

enum class Provenance { kData, kPrior, kLearned };

struct ReleasedLabelSpace {
  LabelSet labels;
  Provenance provenance = Provenance::kPrior;
  // Set for Provenance::kData. A ledger must never account such a release.
  bool non_private = false;

  bool contains(LabelId id) const { return labels.count(id) > 0; }
};

// Applies the remapping: each record keeps its vector and takes the mapped
// label, or is removed when its label maps to drop. Throws MappingError when
// a record's label has no entry.
EmbeddingDataset RemapTask(const EmbeddingDataset& data, const RemapTable& table);

// Chooses the output label space for one task. Never fails on empty data;
// only kLearned may return an empty set.
ReleasedLabelSpace ResolveLabelSpace(const EmbeddingDataset& data,
                                     const LabelPolicy& policy,
                                     std::uint64_t seed);

// Probability that the noisy-count test releases a class of `count` samples.
double LearnedReleaseProbability(double epsilon, double tau, double count);

struct LearnedReleaseBound {
  // Pr[1 + Lap(1/eps) <= tau]: a singleton novel class is not released.
  double delta_star = 0.0;
  // The three lower-bound terms: 1 - e^eps delta*, 1/delta* - e^eps, and the
  // probability that the singleton class is released (1 - delta*).
  double terms[3] = {0.0, 0.0, 0.0};
  // max of the terms, clamped to [0, 1]. A value of 1 means no delta < 1
  // makes the mechanism DP.
  double delta = 0.0;
  // For k > 1: lower bound 1 - delta_k on the probability that a k-sample
  // novel class is dropped by any (eps, delta)-DP label release.
  std::optional<double> group_drop_probability;
};

// Evaluates the delta lower bound of the Laplace threshold label release for
// a singleton novel class. When new_class_count > 1 the group-DP drop bound
// is added, using `group_delta` if given and the singleton delta otherwise.
LearnedReleaseBound LearnedReleaseDelta(
    double epsilon, double tau, std::int64_t new_class_count,
    std::optional<double> group_delta = std::nullopt);

struct ClassLossPoint {
  double epsilon = 0.0;
  std::int64_t k = 1;
  double drop_probability = 0.0;  // 1 - delta_k, clamped to [0, 1]
};

// Rows ordered by epsilon (argument order) then k = 1..k_max.
std::vector<ClassLossPoint> ClassLossCurve(const std::vector<double>& epsilons,
                                           double delta, std::int64_t k_max);

}  // namespace dpcl

#endif  // DPCL_LABEL_SPACE_H_
