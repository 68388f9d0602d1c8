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

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dpcl/accountant.h"
#include "dpcl/errors.h"
#include "generators.h"
#include "gtest/gtest.h"

namespace dpcl {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;
using testing::Gen;

PrivacyLedger TenReleases(CompositionMode mode, bool distinct_scopes) {
  PrivacyLedger ledger(mode);
  for (int t = 1; t <= 10; ++t) {
    ledger = ledger.RecordRelease(
        {t, {1.0, 1e-5}, distinct_scopes ? "task-" + std::to_string(t) : "shared"});
  }
  return ledger;
}

TEST(LedgerTest, TenTaskComposition) {
  EXPECT_EQ(TenReleases(CompositionMode::kParallel, true).Total(),
            (PrivacyBudget{1.0, 1e-5}));
  EXPECT_EQ(TenReleases(CompositionMode::kSequentialBasic, true).Total(),
            (PrivacyBudget{10.0, 1e-4}));
  EXPECT_EQ(TenReleases(CompositionMode::kParallelMultiAdjacent, true).Total(),
            (PrivacyBudget{10.0, 1e-4}));
}

TEST(LedgerTest, ParallelScopeCollision) {
  EXPECT_THROW(TenReleases(CompositionMode::kParallel, false).Total(), ScopeViolation);
  EXPECT_NO_THROW(TenReleases(CompositionMode::kSequentialBasic, false).Total());
  const nlohmann::json j = TenReleases(CompositionMode::kParallel, false).ToJson();
  EXPECT_TRUE(j["total"].is_null());
  EXPECT_TRUE(j.contains("error"));
}

TEST(LedgerTest, EmptyLedgerIsZero) {
  EXPECT_EQ(PrivacyLedger(CompositionMode::kParallel).Total(), (PrivacyBudget{0.0, 0.0}));
}

TEST(LedgerTest, RecordReleaseLeavesReceiverUntouched) {
  const PrivacyLedger a;
  const PrivacyLedger b = a.RecordRelease({1, {0.5, 1e-6}, "x"});
  EXPECT_TRUE(a.records().empty());
  EXPECT_EQ(b.records().size(), 1u);
}

TEST(LedgerTest, RejectsInvalidReleases) {
  const PrivacyLedger l;
  EXPECT_THROW((void)l.RecordRelease({0, {1.0, 1e-5}, "x"}), InvalidArgument);
  EXPECT_THROW((void)l.RecordRelease({1, {0.0, 1e-5}, "x"}), InvalidArgument);
  EXPECT_THROW((void)l.RecordRelease({1, {1.0, 1.0}, "x"}), InvalidArgument);
}

TEST(LedgerTest, ModeNamesRoundTrip) {
  for (CompositionMode m : {CompositionMode::kParallel, CompositionMode::kSequentialBasic,
                            CompositionMode::kParallelMultiAdjacent}) {
    EXPECT_EQ(ParseCompositionMode(ToString(m)), m);
  }
  EXPECT_THROW(ParseCompositionMode("bogus"), InvalidArgument);
}

// Random ledgers: parallel <= sequential, multi-adjacent = n * max, and every
// release lies within the sequential total.
TEST(LedgerPropertyTest, CompositionOrdering) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen gen(seed);
    const int n = static_cast<int>(gen.Size(1, 12));
    PrivacyLedger par(CompositionMode::kParallel);
    PrivacyLedger seq(CompositionMode::kSequentialBasic);
    PrivacyLedger multi(CompositionMode::kParallelMultiAdjacent);
    double eps_max = 0.0, delta_max = 0.0, eps_sum = 0.0, delta_sum = 0.0;
    for (int t = 1; t <= n; ++t) {
      const PrivacyBudget b{gen.LogUniform(0.01, 10.0), gen.LogUniform(1e-10, 1e-3)};
      const ReleaseRecord r{t, b, "s" + std::to_string(t)};
      par = par.RecordRelease(r);
      seq = seq.RecordRelease(r);
      multi = multi.RecordRelease(r);
      eps_max = std::max(eps_max, b.epsilon);
      delta_max = std::max(delta_max, b.delta);
      eps_sum += b.epsilon;
      delta_sum += b.delta;
    }
    EXPECT_EQ(par.Total(), (PrivacyBudget{eps_max, delta_max})) << seed;
    EXPECT_DOUBLE_EQ(seq.Total().epsilon, eps_sum) << seed;
    EXPECT_DOUBLE_EQ(seq.Total().delta, delta_sum) << seed;
    EXPECT_DOUBLE_EQ(multi.Total().epsilon, n * eps_max) << seed;
    EXPECT_LE(par.Total().epsilon, seq.Total().epsilon) << seed;
    EXPECT_TRUE(seq.EachReleaseWithinSequentialTotal()) << seed;
  }
}

// Direct summation sum_{i<k} e^{i eps} delta in 50-digit arithmetic.
double GroupDeltaBySummation(double eps, double delta, int k) {
  Big sum = 0;
  for (int i = 0; i < k; ++i) sum += boost::multiprecision::exp(Big(i) * Big(eps));
  return (sum * Big(delta)).convert_to<double>();
}

TEST(GroupDpTest, MatchesDirectSummation) {
  for (double eps : {0.1, 0.5, 1.0, 2.0}) {
    for (int k = 1; k <= 15; ++k) {
      const double oracle = GroupDeltaBySummation(eps, 1e-7, k);
      if (oracle >= 1.0) continue;
      EXPECT_NEAR(GroupDpDelta({eps, 1e-7, k}), oracle, 1e-12 * oracle) << eps << " " << k;
    }
  }
}

TEST(GroupDpTest, ThirteenthSampleBreaksNinetyNinePercent) {
  const double d12 = GroupDpDelta({1.0, 1e-7, 12});
  const double d13 = GroupDpDelta({1.0, 1e-7, 13});
  EXPECT_GE(1.0 - d12, 0.99);
  EXPECT_LT(1.0 - d13, 0.99);
}

TEST(GroupDpTest, SingletonAndSaturation) {
  EXPECT_DOUBLE_EQ(GroupDpDelta({1.0, 1e-5, 1}), 1e-5);
  EXPECT_EQ(GroupDpDelta({5.0, 1e-3, 100}), 1.0);
  EXPECT_THROW(GroupDpDelta({1.0, 1e-5, 0}), InvalidArgument);
}

// Renyi divergence oracle: log E_{z~N(0, s^2)}[((1-q) + q exp((2z-1)/(2 s^2)))^a]
// / (a - 1) by trapezoidal quadrature in log space.
double RdpByQuadrature(double q, double s, double a) {
  const double lo = -40.0 * s;
  const double hi = a + 40.0 * s;
  const double h = s / 400.0;
  const auto n = static_cast<std::int64_t>((hi - lo) / h);
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(n) + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i <= n; ++i) {
    const double z = lo + static_cast<double>(i) * h;
    const double log_pdf = -z * z / (2 * s * s) - std::log(s * std::sqrt(2 * M_PI));
    const double r = (2 * z - 1) / (2 * s * s);
    // log((1-q) + q e^r) without overflow
    const double log_mix = r > 0 ? r + std::log(q + (1 - q) * std::exp(-r))
                                 : std::log((1 - q) + q * std::exp(r));
    const double v = log_pdf + a * log_mix;
    logs.push_back(v);
    peak = std::max(peak, v);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double w = (i == 0 || i + 1 == logs.size()) ? 0.5 : 1.0;
    acc += w * std::exp(logs[i] - peak);
  }
  return (peak + std::log(acc * h)) / (a - 1);
}

TEST(RdpTest, MatchesQuadrature) {
  for (double q : {0.01, 0.1, 0.5}) {
    for (double s : {0.8, 1.5, 4.0}) {
      for (double a : {2.0, 3.5, 8.0, 16.25, 40.0}) {
        const double ours = SubsampledGaussianRdp(q, s, a);
        const double oracle = RdpByQuadrature(q, s, a);
        EXPECT_NEAR(ours, oracle, 1e-7 * std::abs(oracle) + 1e-12)
            << "q=" << q << " s=" << s << " a=" << a;
      }
    }
  }
}

TEST(RdpTest, FullBatchIsPlainGaussian) {
  for (double a : {1.5, 2.0, 10.0, 33.25}) {
    EXPECT_NEAR(SubsampledGaussianRdp(1.0, 1.3, a), a / (2 * 1.3 * 1.3), 1e-12);
  }
  EXPECT_EQ(SubsampledGaussianRdp(0.0, 1.0, 4.0), 0.0);
}

TEST(RdpTest, OrderGrid) {
  const std::vector<double>& orders = DefaultRdpOrders();
  EXPECT_DOUBLE_EQ(orders.front(), 1.25);
  EXPECT_DOUBLE_EQ(orders.back(), 255.0);
  for (std::size_t i = 1; i < orders.size(); ++i) {
    EXPECT_DOUBLE_EQ(orders[i] - orders[i - 1], 0.25);
  }
}

TEST(DpSgdEpsilonTest, EdgeCasesAndMonotonicity) {
  EXPECT_EQ(DpSgdEpsilon(1.0, 0.01, 0, 1e-5), 0.0);
  const double base = DpSgdEpsilon(1.0, 0.01, 1000, 1e-5);
  EXPECT_GT(base, 0.0);
  EXPECT_LT(DpSgdEpsilon(1.5, 0.01, 1000, 1e-5), base);
  EXPECT_GT(DpSgdEpsilon(1.0, 0.02, 1000, 1e-5), base);
  EXPECT_GT(DpSgdEpsilon(1.0, 0.01, 2000, 1e-5), base);
  EXPECT_GT(DpSgdEpsilon(1.0, 0.01, 1000, 1e-7), base);
}

TEST(DpSgdEpsilonTest, FullBatchClosedForm) {
  // q = 1: eps = min_a [T a / (2 s^2) + log(1/delta) / (a - 1)].
  const double s = 4.0;
  const std::int64_t steps = 10;
  const double delta = 1e-5;
  double best = std::numeric_limits<double>::infinity();
  for (double a : DefaultRdpOrders()) {
    best = std::min(best, steps * a / (2 * s * s) + std::log(1 / delta) / (a - 1));
  }
  EXPECT_NEAR(DpSgdEpsilon(s, 1.0, steps, delta), best, 1e-12);
}

TEST(DpSgdEpsilonTest, CalibrationRoundTrip) {
  for (double eps : {0.5, 1.0, 4.0}) {
    const double q = 0.05;
    const std::int64_t steps = 200;
    const double nm = CalibrateNoiseMultiplier(eps, q, steps, 1e-5);
    EXPECT_LE(DpSgdEpsilon(nm, q, steps, 1e-5), eps);
    EXPECT_GT(DpSgdEpsilon(nm * 0.99, q, steps, 1e-5), eps);
  }
  EXPECT_EQ(CalibrateNoiseMultiplier(INFINITY, 0.1, 10, 1e-5), 0.0);
  EXPECT_EQ(CalibrateNoiseMultiplier(1.0, 0.1, 0, 1e-5), 0.0);
}

}  // namespace
}  // namespace dpcl
