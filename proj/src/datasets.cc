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

#include "dpcl/datasets.h"

#include <utility>

#include "dpcl/errors.h"

namespace dpcl {

LabelUniverse::LabelUniverse(std::vector<std::string> names,
                             std::size_t dummy_count)
    : names_(std::move(names)), dummy_count_(dummy_count) {
  if (names_.empty()) {
    throw InvalidArgument("label universe must contain at least one label");
  }
  if (dummy_count_ > names_.size()) {
    throw InvalidArgument("dummy count exceeds label universe size");
  }
  if (names_.size() > UINT32_MAX) {
    throw InvalidArgument("label universe too large for 32-bit label ids");
  }
  index_.reserve(names_.size());
  for (std::uint32_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw InvalidArgument("label names must be non-empty");
    if (!index_.emplace(names_[i], i).second) {
      throw InvalidArgument("duplicate label name '" + names_[i] + "'");
    }
  }
}

const std::string& LabelUniverse::name(LabelId id) const {
  if (!contains(id)) {
    throw InvalidArgument("label id " + std::to_string(id.value) +
                          " outside universe of size " +
                          std::to_string(size()));
  }
  return names_[id.value];
}

std::optional<LabelId> LabelUniverse::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return LabelId{it->second};
}

LabelUniverse LabelUniverse::WithDummies(std::size_t extra) const {
  std::vector<std::string> names = names_;
  names.reserve(names.size() + extra);
  std::size_t next = dummy_count_;
  for (std::size_t i = 0; i < extra; ++i) {
    std::string candidate;
    do {
      candidate = "__dummy_" + std::to_string(next++);
    } while (index_.count(candidate) > 0);
    names.push_back(std::move(candidate));
  }
  return LabelUniverse(std::move(names), dummy_count_ + extra);
}

EmbeddingDataset::EmbeddingDataset(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
}

EmbeddingDataset::EmbeddingDataset(std::size_t dim, std::vector<Record> records)
    : EmbeddingDataset(dim) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].values.size() != dim_) {
      throw ShapeError("record " + std::to_string(i) + " has dimension " +
                       std::to_string(records[i].values.size()) +
                       ", expected " + std::to_string(dim_));
    }
  }
  records_ = std::move(records);
}

LabelSet EmbeddingDataset::Labels() const {
  LabelSet labels;
  for (const Record& r : records_) labels.insert(r.label);
  return labels;
}

EmbeddingDataset EmbeddingDataset::Select(
    const std::vector<std::size_t>& indices) const {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= records_.size()) {
      throw InvalidArgument("record index " + std::to_string(i) +
                            " out of range");
    }
    out.push_back(records_[i]);
  }
  return EmbeddingDataset(dim_, std::move(out));
}

void EmbeddingDataset::CheckLabels(const LabelUniverse& universe) const {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!universe.contains(records_[i].label)) {
      throw IntegrityError("record " + std::to_string(i) + " has label id " +
                           std::to_string(records_[i].label.value) +
                           " but the universe has " +
                           std::to_string(universe.size()) + " labels");
    }
  }
}

EmbeddingDataset Concatenate(std::size_t dim,
                             const std::vector<const EmbeddingDataset*>& parts) {
  std::vector<Record> out;
  for (const EmbeddingDataset* part : parts) {
    if (part->dim() != dim) {
      throw ShapeError("cannot concatenate datasets of dimension " +
                       std::to_string(part->dim()) + " and " +
                       std::to_string(dim));
    }
    out.insert(out.end(), part->records().begin(), part->records().end());
  }
  return EmbeddingDataset(dim, std::move(out));
}

}  // namespace dpcl
