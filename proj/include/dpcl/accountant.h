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

// Task-wise privacy accounting.
//
// Every DP release made while processing a task stream is appended to a
// PrivacyLedger. The ledger reports the composed guarantee under one of three
// rules:
//
//   kParallel               releases touch pairwise-disjoint units; the
//                           total is the worst single release.
//   kSequentialBasic        basic composition; budgets add up.
//   kParallelMultiAdjacent  adjacency may touch every task at once; the
//                           total is (n * eps_max, n * delta_max).

#ifndef DPCL_ACCOUNTANT_H_
#define DPCL_ACCOUNTANT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpcl/mechanisms.h"
#include "json.hpp"

namespace dpcl {

enum class CompositionMode {
  kParallel,
  kSequentialBasic,
  kParallelMultiAdjacent,
};

std::string_view ToString(CompositionMode mode);
CompositionMode ParseCompositionMode(std::string_view name);

struct ReleaseRecord {
  int task_index = 1;  // 1-based
  PrivacyBudget budget;
  // Opaque identifier of the privacy-unit population the release touched.
  // Two releases are disjoint iff their scopes differ.
  std::string unit_scope;
};

// Append-only value type. RecordRelease returns a new ledger and leaves the
// receiver untouched, so a copy taken earlier keeps reporting its own total.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(CompositionMode mode = CompositionMode::kSequentialBasic)
      : mode_(mode) {}

  [[nodiscard]] PrivacyLedger RecordRelease(ReleaseRecord record) const;

  CompositionMode mode() const { return mode_; }
  const std::vector<ReleaseRecord>& records() const { return records_; }

  // Composed guarantee; (0, 0) for an empty ledger. Throws ScopeViolation in
  // parallel mode when two records share a unit scope.
  PrivacyBudget Total() const;

  // Every individual release is componentwise within the sequential total of
  // the ledger. Holds for any valid ledger; exposed for auditing.
  bool EachReleaseWithinSequentialTotal() const;

  // {"mode", "releases": [{task, epsilon, delta, scope}], "total"}. When the
  // total is undefined (scope collision in parallel mode) "total" is null and
  // "error" carries the reason.
  nlohmann::json ToJson() const;

 private:
  CompositionMode mode_;
  std::vector<ReleaseRecord> records_;
};

struct GroupDpQuery {
  double epsilon = 1.0;
  double delta = 1e-5;
  std::int64_t k = 1;
};

// delta_k = sum_{i=0}^{k-1} e^{i eps} delta = delta (e^{k eps} - 1)/(e^eps - 1),
// evaluated in log space and saturated at 1.
double GroupDpDelta(const GroupDpQuery& query);

// Renyi DP of order `alpha` (> 1) for one step of the Poisson-subsampled
// Gaussian mechanism with sampling rate q and noise multiplier sigma.
// Integer orders use the exact binomial expansion; fractional orders use the
// two-sided erfc series.
double SubsampledGaussianRdp(double sample_rate, double noise_multiplier,
                             double alpha);

// The order grid {1.25, 1.5, ..., 255}.
const std::vector<double>& DefaultRdpOrders();

// Upper bound on epsilon at `delta` after `steps` DP-SGD steps:
//   min_alpha [ steps * rdp(alpha) + log(1/delta) / (alpha - 1) ].
double DpSgdEpsilon(double noise_multiplier, double sample_rate,
                    std::int64_t steps, double delta);

// Smallest noise multiplier whose DpSgdEpsilon does not exceed `epsilon`.
// Returns 0 when epsilon is +inf or steps is 0.
double CalibrateNoiseMultiplier(double epsilon, double sample_rate,
                                std::int64_t steps, double delta);

}  // namespace dpcl

#endif  // DPCL_ACCOUNTANT_H_
