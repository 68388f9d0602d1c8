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
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dpcl/accountant.h"
#include "dpcl/errors.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"
#include "generators.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace dpcl {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;
using ::testing::ElementsAre;
using testing::Gen;

constexpr LabelId kA{0};
constexpr LabelId kB{1};
constexpr LabelId kC{2};
constexpr LabelId kUnknown{3};

EmbeddingDataset Labeled(std::vector<LabelId> labels) {
  std::vector<Record> records;
  float x = 0.f;
  for (LabelId l : labels) records.push_back(Record{{x += 1.f}, l});
  return EmbeddingDataset(1, std::move(records));
}

std::vector<LabelId> LabelsOf(const EmbeddingDataset& d) {
  std::vector<LabelId> out;
  for (const Record& r : d.records()) out.push_back(r.label);
  return out;
}

TEST(RemapTest, IdentityAndDropAll) {
  const EmbeddingDataset d = Labeled({kA, kB, kC});
  EXPECT_EQ(RemapTask(d, RemapTable::Identity(d.Labels())), d);
  RemapTable drop;
  for (LabelId l : d.Labels()) drop.Drop(l);
  EXPECT_TRUE(RemapTask(d, drop).empty());
}

TEST(RemapTest, MapsDropsAndKeepsOrder) {
  const EmbeddingDataset d = Labeled({kA, kA, kB, kC, kC});
  RemapTable table;
  table.Map(kA, kA);
  table.Drop(kB);
  table.Map(kC, kUnknown);
  const EmbeddingDataset out = RemapTask(d, table);
  EXPECT_THAT(LabelsOf(out), ElementsAre(kA, kA, kUnknown, kUnknown));
  EXPECT_EQ(out[2].values, d[3].values);
}

TEST(RemapTest, MissingEntryIsMappingError) {
  RemapTable table;
  table.Map(kA, kA);
  EXPECT_THROW(RemapTask(Labeled({kA, kB}), table), MappingError);
}

TEST(RemapTest, TargetsMustLieInPrior) {
  RemapTable table;
  table.Map(kA, kC);
  EXPECT_THROW(LabelPolicy::Prior({kA, kB}, table), MappingError);
  EXPECT_NO_THROW(LabelPolicy::Prior({kA, kC}, table));
}

TEST(PolicyTest, LearnedNeedsPositiveDelta) {
  EXPECT_THROW(LabelPolicy::Learned(2.0, 1.0, 0.0), Unsupported);
  EXPECT_NO_THROW(LabelPolicy::Learned(2.0, 1.0, 1e-3));
  EXPECT_THROW(LabelPolicy::Learned(2.0, 0.0), InvalidArgument);
  LabelPolicy missing;
  missing.kind = LabelPolicyKind::kPrior;
  EXPECT_THROW(missing.Validate(), InvalidArgument);
}

TEST(PolicyTest, KindNames) {
  EXPECT_EQ(ToString(LabelPolicyKind::kLearned), "s_learned");
  EXPECT_EQ(ParseLabelPolicyKind("s_prior"), LabelPolicyKind::kPrior);
  EXPECT_EQ(ParseLabelPolicyKind("data"), LabelPolicyKind::kData);
  EXPECT_THROW(ParseLabelPolicyKind("public"), InvalidArgument);
}

TEST(ResolveTest, DataPolicyLeaksANovelLabel) {
  const EmbeddingDataset d = Labeled({kA, kB, kA});
  const EmbeddingDataset adjacent = Labeled({kA, kB, kA, kC});
  const ReleasedLabelSpace r = ResolveLabelSpace(d, LabelPolicy::Data(), 1);
  const ReleasedLabelSpace r2 = ResolveLabelSpace(adjacent, LabelPolicy::Data(), 1);
  EXPECT_TRUE(r.non_private);
  EXPECT_EQ(r.provenance, Provenance::kData);
  EXPECT_THAT(r.labels, ElementsAre(kA, kB));
  EXPECT_THAT(r2.labels, ElementsAre(kA, kB, kC));
}

TEST(ResolveTest, PriorPolicyIgnoresData) {
  LabelSet prior;
  for (std::uint32_t i = 0; i < 100; ++i) prior.insert(LabelId{i + 7});
  const LabelPolicy policy = LabelPolicy::Prior(prior);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Gen gen(seed);
    const EmbeddingDataset d = gen.Dataset(2, gen.Size(0, 30), 10);
    const ReleasedLabelSpace r = ResolveLabelSpace(d, policy, seed);
    EXPECT_EQ(r.labels, prior);
    EXPECT_FALSE(r.non_private);
  }
  EXPECT_EQ(ResolveLabelSpace(EmbeddingDataset(3), policy, 0).labels, prior);
}

TEST(ResolveTest, LearnedWithVeryLowThresholdReleasesEverything) {
  const EmbeddingDataset d = Labeled({kA, kB, kB, kC});
  const LabelPolicy policy =
      LabelPolicy::Learned(-std::numeric_limits<double>::infinity(), 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_THAT(ResolveLabelSpace(d, policy, seed).labels, ElementsAre(kA, kB, kC));
  }
  EXPECT_TRUE(ResolveLabelSpace(EmbeddingDataset(1), policy, 0).labels.empty());
}

TEST(ResolveTest, LearnedIsDeterministicPerSeed) {
  Gen gen(4);
  const EmbeddingDataset d = gen.Dataset(2, 60, 12);
  const LabelPolicy policy = LabelPolicy::Learned(5.0, 0.5);
  EXPECT_EQ(ResolveLabelSpace(d, policy, 9).labels, ResolveLabelSpace(d, policy, 9).labels);
}

// Release frequency of a class with k samples against the closed form.
TEST(ResolvePropertyTest, LearnedFrequencyMatchesLaplaceTail) {
  const int trials = 100000;
  for (const auto& [eps, tau, k] : std::vector<std::tuple<double, double, int>>{
           {1.0, 2.0, 1}, {0.5, 3.0, 2}, {2.0, 4.0, 5}}) {
    std::vector<LabelId> labels(static_cast<std::size_t>(k), kB);
    const EmbeddingDataset d = Labeled(labels);
    const LabelPolicy policy = LabelPolicy::Learned(tau, eps);
    int released = 0;
    for (int i = 0; i < trials; ++i) {
      released += ResolveLabelSpace(d, policy, static_cast<std::uint64_t>(i)).contains(kB);
    }
    const double p = 1.0 - LaplaceTail(tau - k, {1.0 / eps});
    EXPECT_DOUBLE_EQ(LearnedReleaseProbability(eps, tau, k), p);
    const double se = std::sqrt(p * (1 - p) / trials);
    EXPECT_NEAR(static_cast<double>(released) / trials, p, 3 * se)
        << eps << " " << tau << " " << k;
  }
}

TEST(LearnedBoundTest, TermsMatchHighPrecision) {
  const LearnedReleaseBound b = LearnedReleaseDelta(1.0, 2.0, 1);
  const Big ds = 1 - boost::multiprecision::exp(Big(-1)) / 2;
  const Big e = boost::multiprecision::exp(Big(1));
  const double t0 = Big(1 - e * ds).convert_to<double>();
  const double t1 = Big(1 / ds - e).convert_to<double>();
  const double t2 = Big(1 - ds).convert_to<double>();
  EXPECT_NEAR(b.delta_star, ds.convert_to<double>(), 1e-15);
  EXPECT_NEAR(b.terms[0], t0, 1e-15);
  EXPECT_NEAR(b.terms[1], t1, 1e-15);
  EXPECT_NEAR(b.terms[2], t2, 1e-15);
  EXPECT_NEAR(b.delta, std::max({t0, t1, t2}), 1e-15);
  EXPECT_FALSE(b.group_drop_probability.has_value());
}

TEST(LearnedBoundTest, AlwaysReleasingNeedsDeltaOne) {
  EXPECT_EQ(LearnedReleaseDelta(1.0, -1e9, 1).delta, 1.0);
  EXPECT_EQ(LearnedReleaseDelta(1.0, -std::numeric_limits<double>::infinity(), 1).delta,
            1.0);
}

TEST(LearnedBoundTest, GroupRouteForLargerClasses) {
  const LearnedReleaseBound b = LearnedReleaseDelta(1.0, 2.0, 12, 1e-7);
  ASSERT_TRUE(b.group_drop_probability.has_value());
  EXPECT_GE(*b.group_drop_probability, 0.9905);
  EXPECT_DOUBLE_EQ(*b.group_drop_probability, 1.0 - GroupDpDelta({1.0, 1e-7, 12}));
  EXPECT_THROW(LearnedReleaseDelta(1.0, 2.0, 0), InvalidArgument);
}

TEST(ClassLossCurveTest, ThresholdAndShape) {
  const auto rows = ClassLossCurve({0.5, 1.0}, 1e-7, 20);
  ASSERT_EQ(rows.size(), 40u);
  std::int64_t first_below = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].k == 1) EXPECT_DOUBLE_EQ(rows[i].drop_probability, 1.0 - 1e-7);
    if (i > 0 && rows[i].epsilon == rows[i - 1].epsilon) {
      EXPECT_LE(rows[i].drop_probability, rows[i - 1].drop_probability);
    }
    if (rows[i].epsilon == 1.0 && first_below == 0 && rows[i].drop_probability < 0.99) {
      first_below = rows[i].k;
    }
  }
  EXPECT_EQ(first_below, 13);
  EXPECT_THROW(ClassLossCurve({1.0}, 1e-7, 0), InvalidArgument);
}

}  // namespace
}  // namespace dpcl
