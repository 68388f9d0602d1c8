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

// Cosine prototype classifier with DP per-class feature sums.
//
// For every task t and every released label o, the table accumulates
//
//   s_o <- s_o + sum_{x in D_{t,o}} x / |x| + N(0, sigma^2 I)
//
// Each record contributes one unit-norm summand to exactly one class, so every
// per-class sum has L2 sensitivity 1 under add/remove adjacency. Only sums are
// released, never counts. Labels outside the released space are untouched.

#ifndef DPCL_COSINE_CLASSIFIER_H_
#define DPCL_COSINE_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dpcl/datasets.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"

namespace dpcl {

struct ClassSumTable {
  std::size_t dim = 0;
  std::map<LabelId, std::vector<double>> sums;
  double noise_sigma = 0.0;
  std::size_t seen_tasks = 0;

  explicit ClassSumTable(std::size_t k = 0) : dim(k) {}
};

struct SumUpdate {
  ClassSumTable table;
  std::size_t skipped_zero_norm = 0;   // records with |x| = 0
  std::size_t skipped_unreleased = 0;  // records whose label is not released
};

// One task of the accumulation. Every released label receives exactly one
// noise draw, seeded by (seed, label id), even when the task has no samples
// of it. Throws ShapeError on a dimension mismatch and InvalidArgument when
// params.sensitivity != 1 with sigma > 0.
SumUpdate UpdateSums(const ClassSumTable& table, const EmbeddingDataset& task_data,
                     const ReleasedLabelSpace& released,
                     const GaussianParams& params, std::uint64_t seed);

double CosineSimilarity(std::span<const double> a, std::span<const double> b);

// argmax over stored classes of cosine(query, s_o). Classes with a zero sum
// score -inf; ties go to the lowest label id. Throws NoClasses on an empty
// table and ShapeError on a dimension mismatch.
LabelId PredictCosine(const ClassSumTable& table, std::span<const double> query);
LabelId PredictCosine(const ClassSumTable& table, std::span<const float> query);

// Read-only snapshot of a table for scoring many queries. Stores the
// non-zero sums contiguously with their norms; predictions match
// PredictCosine exactly.
class CosineIndex {
 public:
  explicit CosineIndex(const ClassSumTable& table);

  LabelId Predict(std::span<const double> query) const;

 private:
  std::size_t dim_ = 0;
  std::vector<LabelId> labels_;  // non-zero classes, ascending
  std::vector<double> sums_;     // labels_.size() x dim_
  std::vector<double> norms_;
  std::optional<LabelId> fallback_;  // lowest label when every sum is zero
};

// Checkpoint: EMB1 file of (label id, sum) records + sidecar with the label
// names, and `<path>.json` with {"sigma", "dim", "seen_tasks"}. Sums are
// stored as f32.
void SaveTable(const ClassSumTable& table, const LabelUniverse& universe,
               const std::filesystem::path& path);
ClassSumTable LoadTable(const std::filesystem::path& path);

}  // namespace dpcl

#endif  // DPCL_COSINE_CLASSIFIER_H_
