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
#include <filesystem>
#include <vector>

#include "dpcl/cosine_classifier.h"
#include "dpcl/errors.h"
#include "dpcl/mechanisms.h"
#include "dpcl/rng.h"
#include "generators.h"
#include "gtest/gtest.h"

namespace dpcl {
namespace {

using testing::Gen;

constexpr LabelId kA{0};
constexpr LabelId kB{1};
constexpr LabelId kC{2};

ReleasedLabelSpace Released(LabelSet labels) {
  return ReleasedLabelSpace{std::move(labels), Provenance::kPrior, false};
}

const GaussianParams kNoNoise{0.0, 1.0};

TEST(UpdateSumsTest, SmallExample) {
  const EmbeddingDataset d(2, {Record{{2.f, 0.f}, kA}, Record{{0.f, 3.f}, kB}});
  const SumUpdate u = UpdateSums(ClassSumTable(2), d, Released({kA, kB}), kNoNoise, 0);
  EXPECT_EQ(u.table.sums.at(kA), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(u.table.sums.at(kB), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(u.table.seen_tasks, 1u);
  const std::vector<double> q{0.9, 0.1};
  EXPECT_EQ(PredictCosine(u.table, q), kA);
  EXPECT_EQ(PredictCosine(u.table, std::vector<double>{0.1, 0.9}), kB);
}

TEST(UpdateSumsTest, UnitVectorsAddUp) {
  const EmbeddingDataset d(2, {Record{{5.f, 0.f}, kA}, Record{{0.f, 0.5f}, kA}});
  const SumUpdate u = UpdateSums(ClassSumTable(2), d, Released({kA}), kNoNoise, 0);
  EXPECT_EQ(u.table.sums.at(kA), (std::vector<double>{1.0, 1.0}));
}

TEST(UpdateSumsTest, SkipsZeroAndUnreleased) {
  const EmbeddingDataset d(2, {Record{{0.f, 0.f}, kA}, Record{{1.f, 0.f}, kB},
                               Record{{1.f, 1.f}, kA}});
  const SumUpdate u = UpdateSums(ClassSumTable(2), d, Released({kA}), kNoNoise, 0);
  EXPECT_EQ(u.skipped_zero_norm, 1u);
  EXPECT_EQ(u.skipped_unreleased, 1u);
  EXPECT_FALSE(u.table.sums.contains(kB));
  EXPECT_NEAR(u.table.sums.at(kA)[0], std::sqrt(0.5), 1e-7);
}

TEST(UpdateSumsTest, EveryReleasedClassGetsOneNoiseDraw) {
  const EmbeddingDataset d(3, {Record{{1.f, 0.f, 0.f}, kA}});
  const GaussianParams params{0.7, 1.0};
  const SumUpdate u = UpdateSums(ClassSumTable(3), d, Released({kA, kC}), params, 11);
  EXPECT_EQ(u.table.sums.at(kC), GaussianNoise(3, params, DeriveSeed(11, kC.value)));
  const std::vector<double> za = GaussianNoise(3, params, DeriveSeed(11, kA.value));
  EXPECT_DOUBLE_EQ(u.table.sums.at(kA)[0], 1.0 + za[0]);
  EXPECT_DOUBLE_EQ(u.table.sums.at(kA)[1], za[1]);
  EXPECT_EQ(u.table.noise_sigma, 0.7);
}

TEST(UpdateSumsTest, Errors) {
  const EmbeddingDataset d(3);
  EXPECT_THROW(UpdateSums(ClassSumTable(2), d, Released({kA}), kNoNoise, 0), ShapeError);
  EXPECT_THROW(UpdateSums(ClassSumTable(3), d, Released({kA}), {1.0, 2.0}, 0),
               InvalidArgument);
  EXPECT_THROW(UpdateSums(ClassSumTable(3), d, Released({kA}), {-1.0, 1.0}, 0),
               InvalidArgument);
}

TEST(PredictCosineTest, ZeroSumsAreNeverChosen) {
  ClassSumTable t(2);
  t.sums[kA] = {0.0, 0.0};
  t.sums[kB] = {-1.0, 0.0};
  EXPECT_EQ(PredictCosine(t, std::vector<double>{1.0, 0.0}), kB);
  EXPECT_EQ(CosineIndex(t).Predict(std::vector<double>{1.0, 0.0}), kB);
}

TEST(PredictCosineTest, TiesGoToLowestLabel) {
  ClassSumTable t(2);
  t.sums[kC] = {1.0, 0.0};
  t.sums[kB] = {2.0, 0.0};
  EXPECT_EQ(PredictCosine(t, std::vector<double>{1.0, 1.0}), kB);
  EXPECT_EQ(PredictCosine(t, std::vector<double>{0.0, 0.0}), kB);
  t.sums[kB] = {0.0, 0.0};
  t.sums[kC] = {0.0, 0.0};
  EXPECT_EQ(PredictCosine(t, std::vector<double>{1.0, 1.0}), kB);
  EXPECT_EQ(CosineIndex(t).Predict(std::vector<double>{1.0, 1.0}), kB);
}

TEST(PredictCosineTest, Errors) {
  ClassSumTable empty(2);
  EXPECT_THROW(PredictCosine(empty, std::vector<double>{1.0, 0.0}), NoClasses);
  EXPECT_THROW(CosineIndex(empty).Predict(std::vector<double>{1.0, 0.0}), NoClasses);
  ClassSumTable t(2);
  t.sums[kA] = {1.0, 0.0};
  EXPECT_THROW(PredictCosine(t, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(CosineIndex(t).Predict(std::vector<double>{1.0}), ShapeError);
}

ClassSumTable RandomTable(Gen& gen, std::size_t dim) {
  ClassSumTable t(dim);
  const std::size_t n = gen.Size(1, 12);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(dim, 0.0);
    if (gen.Int(0, 4) != 0) {
      for (double& v : s) v = gen.Normal();
    }
    t.sums[LabelId{static_cast<std::uint32_t>(gen.Size(0, 40))}] = s;
  }
  return t;
}

TEST(PredictCosinePropertyTest, ScaleInvariantAndIndexAgrees) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen gen(seed);
    const std::size_t dim = gen.Size(1, 6);
    const ClassSumTable t = RandomTable(gen, dim);
    const CosineIndex index(t);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> query(dim);
      for (double& v : query) v = gen.Coin() ? gen.Normal() : 0.0;
      const LabelId expected = PredictCosine(t, query);
      EXPECT_EQ(index.Predict(query), expected);
      std::vector<double> scaled = query;
      const double c = gen.LogUniform(1e-3, 1e3);
      for (double& v : scaled) v *= c;
      EXPECT_EQ(PredictCosine(t, scaled), expected);
    }
  }
}

// Without noise, the sums do not depend on how records are split into tasks.
TEST(UpdateSumsPropertyTest, PartitionInvariantWithoutNoise) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Gen gen(seed);
    const std::size_t dim = gen.Size(2, 5);
    const EmbeddingDataset d = gen.Dataset(dim, gen.Size(0, 60), 5);
    LabelSet released;
    for (std::uint32_t l = 0; l < 5; ++l) released.insert(LabelId{l});
    const ClassSumTable whole =
        UpdateSums(ClassSumTable(dim), d, Released(released), kNoNoise, 0).table;

    const std::size_t parts = gen.Size(1, 6);
    std::vector<std::vector<std::size_t>> split(parts);
    for (std::size_t i = 0; i < d.size(); ++i) split[gen.Size(0, parts - 1)].push_back(i);
    ClassSumTable acc(dim);
    for (const auto& idx : split) {
      acc = UpdateSums(acc, d.Select(idx), Released(released), kNoNoise, 0).table;
    }
    ASSERT_EQ(acc.sums.size(), whole.sums.size());
    for (const auto& [label, sum] : whole.sums) {
      for (std::size_t k = 0; k < dim; ++k) {
        EXPECT_NEAR(acc.sums.at(label)[k], sum[k], 1e-12);
      }
    }
  }
}

TEST(TableCheckpointTest, Roundtrip) {
  Gen gen(3);
  ClassSumTable t(4);
  t.noise_sigma = 1.25;
  t.seen_tasks = 3;
  for (std::uint32_t l = 0; l < 3; ++l) {
    std::vector<double> s(4);
    for (double& v : s) v = static_cast<float>(gen.Normal());
    t.sums[LabelId{l}] = s;
  }
  const auto path = std::filesystem::temp_directory_path() / "dpcl_cosine_table.emb1";
  SaveTable(t, LabelUniverse({"a", "b", "c"}), path);
  const ClassSumTable back = LoadTable(path);
  EXPECT_EQ(back.dim, t.dim);
  EXPECT_EQ(back.sums, t.sums);
  EXPECT_EQ(back.noise_sigma, 1.25);
  EXPECT_EQ(back.seen_tasks, 3u);
  std::filesystem::remove(path.string() + ".json");
  EXPECT_THROW(LoadTable(path), IoError);
}

}  // namespace
}  // namespace dpcl
