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

// Linear softmax heads over frozen embeddings, trained with DP-SGD.
//
// Three ways to use them over a task stream:
//   * Ensemble: one head per task, combined at prediction time by taking
//     the largest (optionally median-centred) logit over all heads.
//   * Naive: a single head over the growing label union, trained task
//     after task. Forgets earlier tasks.
//   * Full: a single head trained once on the whole stream (non-continual
//     upper bound).

#ifndef DPCL_DPSGD_ENSEMBLE_H_
#define DPCL_DPSGD_ENSEMBLE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "dpcl/datasets.h"
#include "dpcl/label_space.h"
#include "dpcl/streams.h"
#include "json.hpp"

namespace dpcl {

class LinearHead {
 public:
  LinearHead() = default;

  // All-zero head with one row per label, rows in ascending label order.
  static LinearHead Zeros(const LabelSet& labels, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return labels_.size(); }
  const std::vector<LabelId>& labels() const { return labels_; }
  // Row index of `label`, or rows() if absent.
  std::size_t RowOf(LabelId label) const;

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias() const { return bias_; }
  double& weight(std::size_t row, std::size_t col) { return weights_[row * dim_ + col]; }
  double weight(std::size_t row, std::size_t col) const {
    return weights_[row * dim_ + col];
  }

  std::vector<double> Logits(std::span<const double> x) const;
  // argmax of the logits; ties go to the lowest label. Throws NoClasses when
  // the head has no rows.
  LabelId Predict(std::span<const double> x) const;

  // Copy with zero rows added for labels not yet present.
  LinearHead Extended(const LabelSet& labels) const;

  bool operator==(const LinearHead&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<LabelId> labels_;
  std::vector<double> weights_;  // rows x dim, row-major
  std::vector<double> bias_;
};

struct DpSgdConfig {
  double clip_norm = 1.0;
  // 0 disables the noise (non-private training, used for the eps = inf
  // reference runs).
  double noise_multiplier = 1.0;
  std::size_t expected_batch = 32;
  std::size_t epochs = 10;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  // Emit a small random head instead of zeros when the task has no data.
  bool random_init_empty = false;

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Inputs for DpSgdEpsilon.
struct DpSgdAccounting {
  double noise_multiplier = 0.0;
  double sample_rate = 0.0;
  std::int64_t steps = 0;
};

struct TrainedHead {
  LinearHead head;
  DpSgdAccounting accounting;
};

// Called with (step, L2 norm of the clipped per-sample gradient) for every
// sampled record.
using ClipObserver = std::function<void(std::int64_t, double)>;

struct SoftmaxGradient {
  std::vector<double> weights;  // same layout as LinearHead
  std::vector<double> bias;
  double loss = 0.0;
};

// Cross-entropy loss of one example and its gradient w.r.t. the head.
SoftmaxGradient SoftmaxCrossEntropyGradient(const LinearHead& head,
                                            std::span<const double> x,
                                            LabelId label);

// Runs DP-SGD from `head`. Each step Poisson-samples records with rate
// q = min(1, expected_batch / N), clips per-sample gradients to clip_norm,
// adds N(0, (clip_norm * noise_multiplier)^2) per coordinate, divides by
// q * N and takes a gradient step. Steps = epochs * ceil(N / expected_batch).
// Records whose label has no row are ignored. With no usable records the head
// is returned unchanged and steps is 0. Throws DivergenceError on a
// non-finite loss.
TrainedHead ContinueTraining(const LinearHead& head, const EmbeddingDataset& data,
                             const DpSgdConfig& cfg,
                             const ClipObserver& observer = {});

// Zero-initialized head over `released` trained on `data`, with the step
// randomness seeded by DeriveSeed(cfg.seed, 0).
TrainedHead TrainHead(const EmbeddingDataset& data,
                      const ReleasedLabelSpace& released, const DpSgdConfig& cfg,
                      const ClipObserver& observer = {});

enum class Aggregation { kArgmax, kMedian };

std::string_view ToString(Aggregation aggregation);
Aggregation ParseAggregation(std::string_view name);

struct Ensemble {
  std::vector<LinearHead> heads;  // task order
  Aggregation aggregation = Aggregation::kArgmax;
};

// Largest logit over every head and label (kMedian first subtracts each
// head's median logit). Ties go to the earliest head, then the lowest label.
// Throws NoClasses for an empty ensemble.
LabelId PredictEnsemble(const Ensemble& ensemble, std::span<const double> query);

// Released label space of every task, resolved with seeds derived from
// `seed`.
std::vector<ReleasedLabelSpace> ResolveStreamLabels(const TaskStream& stream,
                                                    std::uint64_t seed);

// Single head over the union of released labels, trained task by task with
// seeds DeriveSeed(cfg.seed, t). The returned list holds a copy of the head
// after each task.
std::vector<LinearHead> TrainNaive(const TaskStream& stream,
                                   const std::vector<ReleasedLabelSpace>& released,
                                   const DpSgdConfig& cfg);
std::vector<LinearHead> TrainNaive(const TaskStream& stream, const DpSgdConfig& cfg);

// Single head trained on the concatenation of all tasks.
TrainedHead TrainFull(const TaskStream& stream,
                      const std::vector<ReleasedLabelSpace>& released,
                      const DpSgdConfig& cfg);
TrainedHead TrainFull(const TaskStream& stream, const DpSgdConfig& cfg);

// Checkpoint: `<path>.json` holds labels, dim, bias and the config with its
// digest; `path` holds the weight rows as an EMB1 blob (label id per row).
void SaveHead(const LinearHead& head, const DpSgdConfig& cfg,
              const std::filesystem::path& path);
LinearHead LoadHead(const std::filesystem::path& path);

}  // namespace dpcl

#endif  // DPCL_DPSGD_ENSEMBLE_H_
