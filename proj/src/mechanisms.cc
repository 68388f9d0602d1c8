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

#include "dpcl/mechanisms.h"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dpcl/errors.h"

namespace dpcl {
namespace {

// Absolute accuracy on delta at which calibration stops.
constexpr double kDeltaTolerance = 1e-12;
constexpr int kMaxBisectionSteps = 2000;

}  // namespace

void ValidateBudget(const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0.0)) {
    throw InvalidArgument("epsilon must be positive, got " +
                          std::to_string(budget.epsilon));
  }
  if (!(budget.delta >= 0.0 && budget.delta < 1.0)) {
    throw InvalidArgument("delta must lie in [0, 1), got " +
                          std::to_string(budget.delta));
  }
}

double StandardNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double GaussianDelta(double epsilon, double sigma, double sensitivity) {
  if (sensitivity == 0.0) return 0.0;
  if (sigma == 0.0) return 1.0;
  if (std::isinf(epsilon)) return 0.0;
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  const double delta =
      StandardNormalCdf(a - b) - std::exp(epsilon) * StandardNormalCdf(-a - b);
  return delta < 0.0 ? 0.0 : delta;
}

GaussianParams CalibrateGaussian(const PrivacyBudget& budget,
                                 double sensitivity) {
  ValidateBudget(budget);
  if (!(sensitivity >= 0.0) || std::isinf(sensitivity)) {
    throw InvalidArgument("sensitivity must be finite and non-negative");
  }
  if (budget.delta == 0.0) {
    throw Unsupported(
        "the Gaussian mechanism cannot satisfy pure epsilon-DP (delta = 0)");
  }
  if (sensitivity == 0.0 || std::isinf(budget.epsilon)) {
    return {0.0, sensitivity};
  }
  const double target = budget.delta;
  auto delta_at = [&](double sigma) {
    return GaussianDelta(budget.epsilon, sigma, sensitivity);
  };

  double hi = sensitivity;
  while (delta_at(hi) > target) hi *= 2.0;
  double lo = hi;
  while (lo > std::numeric_limits<double>::min() && delta_at(lo) <= target) {
    lo *= 0.5;
  }
  // Invariant: delta_at(lo) > target >= delta_at(hi).
  for (int i = 0; i < kMaxBisectionSteps; ++i) {
    if (target - delta_at(hi) <= kDeltaTolerance) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (delta_at(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {hi, sensitivity};
}

double ClassicalGaussianSigma(const PrivacyBudget& budget, double sensitivity) {
  ValidateBudget(budget);
  if (budget.delta == 0.0) {
    throw Unsupported("the classical Gaussian bound needs delta > 0");
  }
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / budget.delta)) /
         budget.epsilon;
}

std::vector<double> GaussianNoise(std::size_t dim, const GaussianParams& params,
                                  std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("noise dimension must be positive");
  if (!(params.sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  std::vector<double> out(dim, 0.0);
  if (params.sigma == 0.0) return out;
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> normal(0.0, params.sigma);
  for (double& v : out) v = normal(rng);
  return out;
}

double LaplaceTail(double x, const LaplaceParams& params) {
  if (!(params.scale > 0.0)) throw InvalidArgument("Laplace scale must be > 0");
  if (x < 0.0) return 0.5 * std::exp(x / params.scale);
  return 1.0 - 0.5 * std::exp(-x / params.scale);
}

double SampleLaplace(const LaplaceParams& params, Rng& rng) {
  if (!(params.scale > 0.0)) throw InvalidArgument("Laplace scale must be > 0");
  double u;
  do {
    u = UniformUnit(rng) - 0.5;
  } while (u == -0.5);
  const double magnitude = -params.scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

}  // namespace dpcl
