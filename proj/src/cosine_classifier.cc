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

#include "dpcl/cosine_classifier.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>

#include "dpcl/emb1.h"
#include "dpcl/errors.h"
#include "dpcl/rng.h"
#include "json.hpp"

namespace dpcl {
namespace {

std::filesystem::path HeaderPath(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

SumUpdate UpdateSums(const ClassSumTable& table, const EmbeddingDataset& task_data,
                     const ReleasedLabelSpace& released,
                     const GaussianParams& params, std::uint64_t seed) {
  if (task_data.dim() != table.dim) {
    throw ShapeError("task dimension " + std::to_string(task_data.dim()) +
                     " does not match table dimension " + std::to_string(table.dim));
  }
  if (!(params.sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (params.sigma > 0.0 && params.sensitivity != 1.0) {
    throw InvalidArgument("per-class sums of unit vectors have sensitivity 1");
  }

  SumUpdate out{table, 0, 0};
  out.table.noise_sigma = params.sigma;
  out.table.seen_tasks = table.seen_tasks + 1;
  for (LabelId o : released.labels) {
    out.table.sums.try_emplace(o, std::vector<double>(table.dim, 0.0));
  }

  for (const Record& r : task_data.records()) {
    if (!released.contains(r.label)) {
      ++out.skipped_unreleased;
      continue;
    }
    auto it = out.table.sums.find(r.label);
    double norm = 0.0;
    for (float v : r.values) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      ++out.skipped_zero_norm;
      continue;
    }
    std::vector<double>& sum = it->second;
    for (std::size_t d = 0; d < table.dim; ++d) sum[d] += r.values[d] / norm;
  }

  if (params.sigma > 0.0) {
    for (LabelId o : released.labels) {
      const std::vector<double> z =
          GaussianNoise(table.dim, params, DeriveSeed(seed, o.value));
      std::vector<double>& sum = out.table.sums[o];
      for (std::size_t d = 0; d < table.dim; ++d) sum[d] += z[d];
    }
  }
  return out;
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

LabelId PredictCosine(const ClassSumTable& table, std::span<const double> query) {
  if (table.sums.empty()) throw NoClasses("cosine table has no classes");
  if (query.size() != table.dim) {
    throw ShapeError("query dimension " + std::to_string(query.size()) +
                     " does not match table dimension " + std::to_string(table.dim));
  }
  LabelId best = table.sums.begin()->first;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& [label, sum] : table.sums) {
    bool zero = true;
    for (double v : sum) {
      if (v != 0.0) {
        zero = false;
        break;
      }
    }
    const double score = zero ? -std::numeric_limits<double>::infinity()
                              : CosineSimilarity(query, sum);
    // Strict comparison keeps the lowest id on ties (map is ordered).
    if (!found || score > best_score) {
      best = label;
      best_score = score;
      found = true;
    }
  }
  return best;
}

LabelId PredictCosine(const ClassSumTable& table, std::span<const float> query) {
  std::vector<double> q(query.begin(), query.end());
  return PredictCosine(table, std::span<const double>(q));
}

CosineIndex::CosineIndex(const ClassSumTable& table) : dim_(table.dim) {
  for (const auto& [label, sum] : table.sums) {
    if (!fallback_) fallback_ = label;
    double nb = 0.0;
    for (double v : sum) nb += v * v;
    if (nb == 0.0) continue;
    labels_.push_back(label);
    sums_.insert(sums_.end(), sum.begin(), sum.end());
    norms_.push_back(std::sqrt(nb));
  }
}

LabelId CosineIndex::Predict(std::span<const double> query) const {
  if (!fallback_) throw NoClasses("cosine table has no classes");
  if (query.size() != dim_) {
    throw ShapeError("query dimension " + std::to_string(query.size()) +
                     " does not match table dimension " + std::to_string(dim_));
  }
  if (labels_.empty()) return *fallback_;
  double na = 0.0;
  for (double v : query) na += v * v;
  const double qn = std::sqrt(na);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    const double* s = &sums_[r * dim_];
    double dot = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) dot += query[d] * s[d];
    const double score = na == 0.0 ? 0.0 : dot / (qn * norms_[r]);
    if (r == 0 || score > best_score) {
      best = r;
      best_score = score;
    }
  }
  return labels_[best];
}

void SaveTable(const ClassSumTable& table, const LabelUniverse& universe,
               const std::filesystem::path& path) {
  std::vector<Record> records;
  for (const auto& [label, sum] : table.sums) {
    records.push_back(Record{std::vector<float>(sum.begin(), sum.end()), label});
  }
  SaveEmbeddings(EmbeddingDataset(table.dim, std::move(records)), universe, path);
  const nlohmann::json header = {{"sigma", table.noise_sigma},
                                 {"dim", table.dim},
                                 {"seen_tasks", table.seen_tasks}};
  std::ofstream out(HeaderPath(path));
  if (!out) throw IoError("cannot write '" + HeaderPath(path).string() + "'");
  out << header.dump(2) << '\n';
}

ClassSumTable LoadTable(const std::filesystem::path& path) {
  LabeledDataset stored = LoadEmbeddings(path);
  std::ifstream in(HeaderPath(path));
  if (!in) throw IoError("cannot read '" + HeaderPath(path).string() + "'");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(HeaderPath(path).string() + ": " + e.what());
  }
  ClassSumTable table(header.at("dim").get<std::size_t>());
  if (table.dim != stored.data.dim()) {
    throw IntegrityError("checkpoint header dimension does not match EMB1 body");
  }
  table.noise_sigma = header.at("sigma").get<double>();
  table.seen_tasks = header.at("seen_tasks").get<std::size_t>();
  for (const Record& r : stored.data.records()) {
    table.sums[r.label] = std::vector<double>(r.values.begin(), r.values.end());
  }
  return table;
}

}  // namespace dpcl
