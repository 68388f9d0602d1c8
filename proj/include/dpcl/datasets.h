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

#ifndef DPCL_DATASETS_H_
#define DPCL_DATASETS_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpcl {

// Index of a label inside a LabelUniverse.
struct LabelId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const LabelId&) const = default;
};

using LabelSet = std::set<LabelId>;

// Ordered list of distinct label names. The last `dummy_count` names are
// dummy labels: they inflate the assumed label space but never carry samples.
class LabelUniverse {
 public:
  // The default-constructed universe is empty and only useful as a
  // placeholder; every consumer rejects it.
  LabelUniverse() = default;
  explicit LabelUniverse(std::vector<std::string> names,
                         std::size_t dummy_count = 0);

  std::size_t size() const { return names_.size(); }
  std::size_t dummy_count() const { return dummy_count_; }
  std::size_t real_count() const { return names_.size() - dummy_count_; }
  bool empty() const { return names_.empty(); }

  bool contains(LabelId id) const { return id.value < names_.size(); }
  bool is_dummy(LabelId id) const {
    return contains(id) && id.value >= real_count();
  }
  const std::string& name(LabelId id) const;
  std::optional<LabelId> find(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  // Appends `extra` dummy labels named "__dummy_<n>" after the current ones.
  LabelUniverse WithDummies(std::size_t extra) const;

  bool operator==(const LabelUniverse& other) const {
    return names_ == other.names_ && dummy_count_ == other.dummy_count_;
  }

 private:
  std::vector<std::string> names_;
  std::size_t dummy_count_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// One labeled embedding. Vectors are stored as given (not normalized).
struct Record {
  std::vector<float> values;
  LabelId label;

  bool operator==(const Record&) const = default;
};

// A fixed-dimension list of labeled embedding vectors. May be empty.
class EmbeddingDataset {
 public:
  explicit EmbeddingDataset(std::size_t dim);
  EmbeddingDataset(std::size_t dim, std::vector<Record> records);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<Record>& records() const { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }

  // Distinct labels that occur in the records.
  LabelSet Labels() const;

  // Subset of records at the given positions, in the given order.
  EmbeddingDataset Select(const std::vector<std::size_t>& indices) const;

  // Throws IntegrityError when a record's label is not in `universe`.
  void CheckLabels(const LabelUniverse& universe) const;

  bool operator==(const EmbeddingDataset&) const = default;

 private:
  std::size_t dim_;
  std::vector<Record> records_;
};

// Records concatenated in argument order. All inputs must share `dim`.
EmbeddingDataset Concatenate(std::size_t dim,
                             const std::vector<const EmbeddingDataset*>& parts);

struct LabeledDataset {
  EmbeddingDataset data;
  LabelUniverse universe;
};

}  // namespace dpcl

template <>
struct std::hash<dpcl::LabelId> {
  std::size_t operator()(dpcl::LabelId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

#endif  // DPCL_DATASETS_H_
