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

#include "dpcl/dpsgd_ensemble.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "dpcl/emb1.h"
#include "dpcl/errors.h"
#include "dpcl/rng.h"

namespace dpcl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> ToDouble(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EmbeddingDataset FilterToLabels(const EmbeddingDataset& data, const LabelSet& labels) {
  std::vector<Record> kept;
  for (const Record& r : data.records()) {
    if (labels.count(r.label) > 0) kept.push_back(r);
  }
  return EmbeddingDataset(data.dim(), std::move(kept));
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

LinearHead LinearHead::Zeros(const LabelSet& labels, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("head dimension must be positive");
  LinearHead head;
  head.dim_ = dim;
  head.labels_.assign(labels.begin(), labels.end());
  head.weights_.assign(head.labels_.size() * dim, 0.0);
  head.bias_.assign(head.labels_.size(), 0.0);
  return head;
}

std::size_t LinearHead::RowOf(LabelId label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return labels_.size();
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> LinearHead::Logits(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw ShapeError("input dimension " + std::to_string(x.size()) +
                     " does not match head dimension " + std::to_string(dim_));
  }
  std::vector<double> logits(bias_.begin(), bias_.end());
  for (std::size_t r = 0; r < rows(); ++r) {
    const double* w = &weights_[r * dim_];
    double acc = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) acc += w[d] * x[d];
    logits[r] += acc;
  }
  return logits;
}

LabelId LinearHead::Predict(std::span<const double> x) const {
  if (rows() == 0) throw NoClasses("head has no output labels");
  const std::vector<double> logits = Logits(x);
  std::size_t best = 0;
  for (std::size_t r = 1; r < logits.size(); ++r) {
    if (logits[r] > logits[best]) best = r;
  }
  return labels_[best];
}

LinearHead LinearHead::Extended(const LabelSet& labels) const {
  LabelSet all(labels_.begin(), labels_.end());
  all.insert(labels.begin(), labels.end());
  LinearHead out = Zeros(all, dim_);
  for (std::size_t r = 0; r < rows(); ++r) {
    const std::size_t dst = out.RowOf(labels_[r]);
    std::copy_n(&weights_[r * dim_], dim_, &out.weights_[dst * dim_]);
    out.bias_[dst] = bias_[r];
  }
  return out;
}

void DpSgdConfig::Validate() const {
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip_norm must be positive");
  if (!(noise_multiplier >= 0.0) || std::isinf(noise_multiplier)) {
    throw InvalidArgument("noise_multiplier must be finite and >= 0");
  }
  if (expected_batch == 0) throw InvalidArgument("expected_batch must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
}

nlohmann::json DpSgdConfig::ToJson() const {
  return {{"clip_norm", clip_norm},
          {"noise_multiplier", noise_multiplier},
          {"expected_batch", expected_batch},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"random_init_empty", random_init_empty}};
}

SoftmaxGradient SoftmaxCrossEntropyGradient(const LinearHead& head,
                                            std::span<const double> x,
                                            LabelId label) {
  const std::size_t target = head.RowOf(label);
  if (target == head.rows()) {
    throw InvalidArgument("label " + std::to_string(label.value) +
                          " has no row in the head");
  }
  std::vector<double> logits = head.Logits(x);
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  const double target_logit = logits[target];
  double denom = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max_logit);
    denom += z;
  }
  SoftmaxGradient g;
  g.loss = std::log(denom) + max_logit - target_logit;
  g.bias.resize(head.rows());
  g.weights.resize(head.rows() * head.dim());
  for (std::size_t r = 0; r < head.rows(); ++r) {
    const double residual = logits[r] / denom - (r == target ? 1.0 : 0.0);
    g.bias[r] = residual;
    for (std::size_t d = 0; d < head.dim(); ++d) {
      g.weights[r * head.dim() + d] = residual * x[d];
    }
  }
  return g;
}

TrainedHead ContinueTraining(const LinearHead& head, const EmbeddingDataset& data,
                             const DpSgdConfig& cfg, const ClipObserver& observer) {
  cfg.Validate();
  if (data.dim() != head.dim()) {
    throw ShapeError("data dimension " + std::to_string(data.dim()) +
                     " does not match head dimension " + std::to_string(head.dim()));
  }
  std::vector<std::vector<double>> inputs;
  std::vector<LabelId> targets;
  for (const Record& r : data.records()) {
    if (head.RowOf(r.label) == head.rows()) continue;
    inputs.push_back(ToDouble(r.values));
    targets.push_back(r.label);
  }
  TrainedHead out{head, {cfg.noise_multiplier, 0.0, 0}};
  const std::size_t n = inputs.size();
  if (n == 0 || cfg.epochs == 0) return out;

  const double sample_rate =
      std::min(1.0, static_cast<double>(cfg.expected_batch) / static_cast<double>(n));
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>(
      (n + cfg.expected_batch - 1) / cfg.expected_batch);
  const std::int64_t steps = static_cast<std::int64_t>(cfg.epochs) * steps_per_epoch;
  const double denom = sample_rate * static_cast<double>(n);
  const double noise_std = cfg.clip_norm * cfg.noise_multiplier;
  out.accounting = {cfg.noise_multiplier, sample_rate, steps};

  LinearHead& h = out.head;
  const std::size_t nw = h.rows() * h.dim();
  std::vector<double> grad_w(nw);
  std::vector<double> grad_b(h.rows());
  Rng rng = MakeRng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::int64_t step = 0; step < steps; ++step) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(UniformUnit(rng) < sample_rate)) continue;
      const SoftmaxGradient g = SoftmaxCrossEntropyGradient(h, inputs[i], targets[i]);
      if (!std::isfinite(g.loss)) throw DivergenceError("non-finite loss", step);
      double sq = 0.0;
      for (double v : g.weights) sq += v * v;
      for (double v : g.bias) sq += v * v;
      const double norm = std::sqrt(sq);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      for (std::size_t k = 0; k < nw; ++k) grad_w[k] += scale * g.weights[k];
      for (std::size_t k = 0; k < grad_b.size(); ++k) grad_b[k] += scale * g.bias[k];
      if (observer) observer(step, scale * norm);
    }
    if (noise_std > 0.0) {
      for (double& v : grad_w) v += noise_std * normal(rng);
      for (double& v : grad_b) v += noise_std * normal(rng);
    }
    const double lr = cfg.learning_rate / denom;
    std::span<double> w = h.weights();
    std::span<double> b = h.bias();
    for (std::size_t k = 0; k < nw; ++k) w[k] -= lr * grad_w[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * grad_b[k];
  }
  return out;
}

TrainedHead TrainHead(const EmbeddingDataset& data,
                      const ReleasedLabelSpace& released, const DpSgdConfig& cfg,
                      const ClipObserver& observer) {
  cfg.Validate();
  LinearHead head = LinearHead::Zeros(released.labels, data.dim());
  const EmbeddingDataset usable = FilterToLabels(data, released.labels);
  if (usable.empty() && cfg.random_init_empty) {
    Rng rng = MakeRng(DeriveSeed(cfg.seed, 0x1417));
    std::normal_distribution<double> normal(0.0, 0.01);
    for (double& v : head.weights()) v = normal(rng);
    return {head, {cfg.noise_multiplier, 0.0, 0}};
  }
  DpSgdConfig run_cfg = cfg;
  run_cfg.seed = DeriveSeed(cfg.seed, 0);
  return ContinueTraining(head, usable, run_cfg, observer);
}

std::string_view ToString(Aggregation aggregation) {
  return aggregation == Aggregation::kArgmax ? "argmax" : "median";
}

Aggregation ParseAggregation(std::string_view name) {
  if (name == "argmax") return Aggregation::kArgmax;
  if (name == "median") return Aggregation::kMedian;
  throw InvalidArgument("unknown aggregation rule '" + std::string(name) + "'");
}

LabelId PredictEnsemble(const Ensemble& ensemble, std::span<const double> query) {
  bool found = false;
  LabelId best{};
  double best_score = kNegInf;
  for (const LinearHead& head : ensemble.heads) {
    if (head.rows() == 0) continue;
    std::vector<double> logits = head.Logits(query);
    if (ensemble.aggregation == Aggregation::kMedian) {
      const double m = Median(logits);
      for (double& z : logits) z -= m;
    }
    for (std::size_t r = 0; r < logits.size(); ++r) {
      if (!found || logits[r] > best_score) {
        best = head.labels()[r];
        best_score = logits[r];
        found = true;
      }
    }
  }
  if (!found) throw NoClasses("ensemble has no heads with output labels");
  return best;
}

std::vector<ReleasedLabelSpace> ResolveStreamLabels(const TaskStream& stream,
                                                    std::uint64_t seed) {
  std::vector<ReleasedLabelSpace> out;
  out.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    out.push_back(ResolveLabelSpace(stream.tasks[t].data, stream.tasks[t].policy,
                                    DeriveSeed(seed, t)));
  }
  return out;
}

std::vector<LinearHead> TrainNaive(const TaskStream& stream,
                                   const std::vector<ReleasedLabelSpace>& released,
                                   const DpSgdConfig& cfg) {
  if (stream.size() == 0) throw InvalidArgument("stream has no tasks");
  if (released.size() != stream.size()) {
    throw InvalidArgument("need one released label space per task");
  }
  cfg.Validate();
  std::vector<LinearHead> checkpoints;
  LinearHead head = LinearHead::Zeros({}, stream.dim);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    head = head.Extended(released[t].labels);
    DpSgdConfig task_cfg = cfg;
    task_cfg.seed = DeriveSeed(cfg.seed, t);
    const EmbeddingDataset usable =
        FilterToLabels(stream.tasks[t].data, released[t].labels);
    head = ContinueTraining(head, usable, task_cfg).head;
    checkpoints.push_back(head);
  }
  return checkpoints;
}

std::vector<LinearHead> TrainNaive(const TaskStream& stream, const DpSgdConfig& cfg) {
  return TrainNaive(stream, ResolveStreamLabels(stream, cfg.seed), cfg);
}

TrainedHead TrainFull(const TaskStream& stream,
                      const std::vector<ReleasedLabelSpace>& released,
                      const DpSgdConfig& cfg) {
  if (stream.size() == 0) throw InvalidArgument("stream has no tasks");
  if (released.size() != stream.size()) {
    throw InvalidArgument("need one released label space per task");
  }
  ReleasedLabelSpace all;
  all.provenance = released.front().provenance;
  std::vector<EmbeddingDataset> parts;
  parts.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    all.labels.insert(released[t].labels.begin(), released[t].labels.end());
    all.non_private = all.non_private || released[t].non_private;
    parts.push_back(FilterToLabels(stream.tasks[t].data, released[t].labels));
  }
  std::vector<const EmbeddingDataset*> ptrs;
  for (const EmbeddingDataset& p : parts) ptrs.push_back(&p);
  return TrainHead(Concatenate(stream.dim, ptrs), all, cfg);
}

TrainedHead TrainFull(const TaskStream& stream, const DpSgdConfig& cfg) {
  return TrainFull(stream, ResolveStreamLabels(stream, cfg.seed), cfg);
}

void SaveHead(const LinearHead& head, const DpSgdConfig& cfg,
              const std::filesystem::path& path) {
  std::vector<Record> rows;
  for (std::size_t r = 0; r < head.rows(); ++r) {
    const auto w = head.weights().subspan(r * head.dim(), head.dim());
    rows.push_back(Record{std::vector<float>(w.begin(), w.end()), head.labels()[r]});
  }
  const std::string blob = EncodeEmb1(EmbeddingDataset(head.dim(), std::move(rows)));
  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write '" + path.string() + "'");
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  std::vector<std::uint32_t> ids;
  for (LabelId l : head.labels()) ids.push_back(l.value);
  const nlohmann::json cfg_json = cfg.ToJson();
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(Fnv1a(cfg_json.dump())));
  const nlohmann::json header = {
      {"labels", ids},
      {"dim", head.dim()},
      {"bias", std::vector<double>(head.bias().begin(), head.bias().end())},
      {"config", cfg_json},
      {"config_digest", digest}};
  std::ofstream js(path.string() + ".json", std::ios::trunc);
  if (!js) throw IoError("cannot write '" + path.string() + ".json'");
  js << header.dump(2) << '\n';
}

LinearHead LoadHead(const std::filesystem::path& path) {
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot read '" + path.string() + "'");
  const std::string blob((std::istreambuf_iterator<char>(bin)),
                         std::istreambuf_iterator<char>());
  const EmbeddingDataset rows = DecodeEmb1(blob);
  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("cannot read '" + path.string() + ".json'");
  const nlohmann::json header = nlohmann::json::parse(js);
  LabelSet labels;
  for (std::uint32_t id : header.at("labels").get<std::vector<std::uint32_t>>()) {
    labels.insert(LabelId{id});
  }
  LinearHead head = LinearHead::Zeros(labels, header.at("dim").get<std::size_t>());
  if (head.rows() != rows.size() || head.dim() != rows.dim()) {
    throw IntegrityError("head checkpoint header does not match weight blob");
  }
  const auto bias = header.at("bias").get<std::vector<double>>();
  if (bias.size() != head.rows()) throw IntegrityError("bias length mismatch");
  for (const Record& r : rows.records()) {
    const std::size_t row = head.RowOf(r.label);
    if (row == head.rows()) throw IntegrityError("weight row for unknown label");
    for (std::size_t d = 0; d < head.dim(); ++d) head.weight(row, d) = r.values[d];
  }
  std::copy(bias.begin(), bias.end(), head.bias().begin());
  return head;
}

}  // namespace dpcl
