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

#include "dpcl/label_space.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "dpcl/accountant.h"
#include "dpcl/errors.h"
#include "dpcl/mechanisms.h"
#include "dpcl/rng.h"

namespace dpcl {

RemapTable RemapTable::Identity(const LabelSet& labels) {
  RemapTable table;
  for (LabelId id : labels) table.Map(id, id);
  return table;
}

void RemapTable::CheckTargets(const LabelSet& prior) const {
  for (const auto& [from, to] : entries_) {
    if (to.has_value() && prior.count(*to) == 0) {
      throw MappingError("label " + std::to_string(from.value) +
                         " is remapped to " + std::to_string(to->value) +
                         ", which is not in the prior label set");
    }
  }
}

std::string_view ToString(LabelPolicyKind kind) {
  switch (kind) {
    case LabelPolicyKind::kData:
      return "s_data";
    case LabelPolicyKind::kPrior:
      return "s_prior";
    case LabelPolicyKind::kLearned:
      return "s_learned";
  }
  return "unknown";
}

LabelPolicyKind ParseLabelPolicyKind(std::string_view name) {
  if (name == "s_data" || name == "data") return LabelPolicyKind::kData;
  if (name == "s_prior" || name == "prior") return LabelPolicyKind::kPrior;
  if (name == "s_learned" || name == "learned") return LabelPolicyKind::kLearned;
  throw InvalidArgument("unknown label policy '" + std::string(name) + "'");
}

LabelPolicy LabelPolicy::Data() { return LabelPolicy{}; }

LabelPolicy LabelPolicy::Prior(LabelSet prior, std::optional<RemapTable> remap) {
  LabelPolicy policy;
  policy.kind = LabelPolicyKind::kPrior;
  policy.prior = std::move(prior);
  policy.remap = std::move(remap);
  policy.Validate();
  return policy;
}

LabelPolicy LabelPolicy::Learned(double tau, double release_epsilon,
                                 std::optional<double> release_delta) {
  LabelPolicy policy;
  policy.kind = LabelPolicyKind::kLearned;
  policy.threshold_tau = tau;
  policy.release_epsilon = release_epsilon;
  policy.release_delta = release_delta;
  policy.Validate();
  return policy;
}

void LabelPolicy::Validate() const {
  switch (kind) {
    case LabelPolicyKind::kData:
      return;
    case LabelPolicyKind::kPrior:
      if (!prior.has_value()) {
        throw InvalidArgument("s_prior policy requires a prior label set");
      }
      if (remap.has_value()) remap->CheckTargets(*prior);
      return;
    case LabelPolicyKind::kLearned:
      if (!threshold_tau.has_value() || !release_epsilon.has_value()) {
        throw InvalidArgument(
            "s_learned policy requires threshold_tau and release_epsilon");
      }
      if (std::isnan(*threshold_tau)) {
        throw InvalidArgument("threshold_tau must not be NaN");
      }
      if (!(*release_epsilon > 0.0) || std::isinf(*release_epsilon)) {
        throw InvalidArgument("release_epsilon must be finite and positive");
      }
      if (release_delta.has_value()) {
        if (*release_delta == 0.0) {
          throw Unsupported(
              "a data-dependent label set cannot be released under pure "
              "epsilon-DP; s_learned needs delta > 0");
        }
        if (!(*release_delta > 0.0 && *release_delta < 1.0)) {
          throw InvalidArgument("release_delta must lie in (0, 1)");
        }
      }
      return;
  }
}

EmbeddingDataset RemapTask(const EmbeddingDataset& data,
                           const RemapTable& table) {
  std::vector<Record> out;
  out.reserve(data.size());
  for (const Record& r : data.records()) {
    auto it = table.entries().find(r.label);
    if (it == table.entries().end()) {
      throw MappingError("no remap entry for label " +
                         std::to_string(r.label.value));
    }
    if (!it->second.has_value()) continue;
    out.push_back(Record{r.values, *it->second});
  }
  return EmbeddingDataset(data.dim(), std::move(out));
}

double LearnedReleaseProbability(double epsilon, double tau, double count) {
  return 1.0 - LaplaceTail(tau - count, LaplaceParams{1.0 / epsilon});
}

ReleasedLabelSpace ResolveLabelSpace(const EmbeddingDataset& data,
                                     const LabelPolicy& policy,
                                     std::uint64_t seed) {
  policy.Validate();
  ReleasedLabelSpace out;
  switch (policy.kind) {
    case LabelPolicyKind::kData:
      out.labels = data.Labels();
      out.provenance = Provenance::kData;
      out.non_private = true;
      return out;
    case LabelPolicyKind::kPrior:
      out.labels = *policy.prior;
      out.provenance = Provenance::kPrior;
      return out;
    case LabelPolicyKind::kLearned: {
      std::map<LabelId, std::int64_t> counts;
      for (const Record& r : data.records()) ++counts[r.label];
      const LaplaceParams noise{1.0 / *policy.release_epsilon};
      for (const auto& [label, count] : counts) {
        Rng rng = MakeRng(DeriveSeed(seed, label.value));
        const double noisy = static_cast<double>(count) + SampleLaplace(noise, rng);
        if (noisy > *policy.threshold_tau) out.labels.insert(label);
      }
      out.provenance = Provenance::kLearned;
      return out;
    }
  }
  return out;
}

LearnedReleaseBound LearnedReleaseDelta(double epsilon, double tau,
                                        std::int64_t new_class_count,
                                        std::optional<double> group_delta) {
  if (!(epsilon > 0.0) || std::isinf(epsilon)) {
    throw InvalidArgument("epsilon must be finite and positive");
  }
  if (new_class_count < 1) {
    throw InvalidArgument("new class count must be >= 1");
  }
  LearnedReleaseBound bound;
  bound.delta_star = LaplaceTail(tau - 1.0, LaplaceParams{1.0 / epsilon});
  const double e_eps = std::exp(epsilon);
  bound.terms[0] = 1.0 - e_eps * bound.delta_star;
  bound.terms[1] = bound.delta_star > 0.0
                       ? 1.0 / bound.delta_star - e_eps
                       : std::numeric_limits<double>::infinity();
  bound.terms[2] = 1.0 - bound.delta_star;
  const double worst = *std::max_element(std::begin(bound.terms), std::end(bound.terms));
  bound.delta = std::clamp(worst, 0.0, 1.0);

  if (new_class_count > 1) {
    const double base = group_delta.value_or(bound.delta);
    if (base >= 1.0) {
      bound.group_drop_probability = 0.0;
    } else {
      const double delta_k = GroupDpDelta({epsilon, base, new_class_count});
      bound.group_drop_probability = std::clamp(1.0 - delta_k, 0.0, 1.0);
    }
  }
  return bound;
}

std::vector<ClassLossPoint> ClassLossCurve(const std::vector<double>& epsilons,
                                           double delta, std::int64_t k_max) {
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  std::vector<ClassLossPoint> rows;
  rows.reserve(epsilons.size() * static_cast<std::size_t>(k_max));
  for (double eps : epsilons) {
    for (std::int64_t k = 1; k <= k_max; ++k) {
      const double delta_k = GroupDpDelta({eps, delta, k});
      rows.push_back({eps, k, std::clamp(1.0 - delta_k, 0.0, 1.0)});
    }
  }
  return rows;
}

}  // namespace dpcl
