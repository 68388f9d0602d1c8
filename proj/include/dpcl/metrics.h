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

// Continual-learning metrics over an accuracy matrix.
//
// acc[t][i] (0-based here) is the accuracy on task i's held-out queries after
// training through task t, for i <= t. Task counts below are 1-based.

#ifndef DPCL_METRICS_H_
#define DPCL_METRICS_H_

#include <cstddef>
#include <span>
#include <vector>

namespace dpcl {

using AccuracyMatrix = std::vector<std::vector<double>>;

// Mean of the first t entries of acc_row. Throws UndefinedMetric for t = 0
// and InvalidArgument when the row is shorter than t.
double AverageAccuracy(std::span<const double> acc_row, std::size_t t);

// Mean over tasks i < t of (best accuracy on i seen before task t) minus
// (accuracy on i after task t). Negative when accuracy improved. Throws
// UndefinedMetric for t < 2 and InvalidArgument for a ragged matrix.
double AverageForgetting(const AccuracyMatrix& acc, std::size_t t);

}  // namespace dpcl

#endif  // DPCL_METRICS_H_
