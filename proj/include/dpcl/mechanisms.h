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

#ifndef DPCL_MECHANISMS_H_
#define DPCL_MECHANISMS_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpcl/rng.h"

namespace dpcl {

// (epsilon, delta) pair. A budget handed to a mechanism must satisfy
// epsilon > 0 and 0 <= delta < 1; epsilon may be +inf to request a
// noiseless (non-private) release. Composed totals may be (0, 0).
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  bool operator==(const PrivacyBudget&) const = default;
};

// Throws InvalidArgument unless epsilon > 0 and 0 <= delta < 1.
void ValidateBudget(const PrivacyBudget& budget);

struct GaussianParams {
  double sigma = 0.0;
  double sensitivity = 0.0;  // L2
};

struct LaplaceParams {
  double scale = 1.0;  // b; 1/epsilon for a count query
};

// Standard normal CDF.
double StandardNormalCdf(double x);

// Smallest delta for which N(0, sigma^2) noise on a query of L2 sensitivity
// `sensitivity` is (epsilon, delta)-DP, from the exact trade-off curve of the
// Gaussian mechanism:
//
//   delta = Phi(s/(2 sigma) - eps sigma/s) - e^eps Phi(-s/(2 sigma) - eps sigma/s)
double GaussianDelta(double epsilon, double sigma, double sensitivity);

// Minimal sigma with GaussianDelta(epsilon, sigma, sensitivity) <= delta,
// found by bisection until the achieved delta is within 1e-12 of the target.
// delta = 0 throws Unsupported. epsilon = +inf yields sigma = 0.
GaussianParams CalibrateGaussian(const PrivacyBudget& budget,
                                 double sensitivity);

// Textbook bound sensitivity * sqrt(2 ln(1.25/delta)) / epsilon. Only used
// for cross-checking the analytic calibration.
double ClassicalGaussianSigma(const PrivacyBudget& budget, double sensitivity);

// `dim` i.i.d. N(0, sigma^2) draws; a pure function of (seed, params).
std::vector<double> GaussianNoise(std::size_t dim, const GaussianParams& params,
                                  std::uint64_t seed);

// Pr[Lap(0, b) <= x].
double LaplaceTail(double x, const LaplaceParams& params);

// One Laplace(0, b) draw by inverse-CDF sampling.
double SampleLaplace(const LaplaceParams& params, Rng& rng);

}  // namespace dpcl

#endif  // DPCL_MECHANISMS_H_
