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

#include "dpcl/metrics.h"

#include <algorithm>
#include <string>

#include "dpcl/errors.h"

namespace dpcl {

double AverageAccuracy(std::span<const double> acc_row, std::size_t t) {
  if (t == 0) throw UndefinedMetric("average accuracy needs at least one task");
  if (acc_row.size() < t) {
    throw InvalidArgument("accuracy row has " + std::to_string(acc_row.size()) +
                          " entries, need " + std::to_string(t));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < t; ++i) sum += acc_row[i];
  return sum / static_cast<double>(t);
}

double AverageForgetting(const AccuracyMatrix& acc, std::size_t t) {
  if (t < 2) throw UndefinedMetric("forgetting needs at least two tasks");
  if (acc.size() < t) throw InvalidArgument("accuracy matrix has too few rows");
  for (std::size_t k = 0; k < t; ++k) {
    if (acc[k].size() < k + 1) {
      throw InvalidArgument("row " + std::to_string(k + 1) + " of the accuracy matrix is short");
    }
  }
  const std::vector<double>& last = acc[t - 1];
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < t; ++i) {
    double best = acc[i][i];
    for (std::size_t k = i + 1; k + 1 < t; ++k) best = std::max(best, acc[k][i]);
    sum += best - last[i];
  }
  return sum / static_cast<double>(t - 1);
}

}  // namespace dpcl
