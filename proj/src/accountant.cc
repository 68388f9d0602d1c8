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

#include "dpcl/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "dpcl/errors.h"

namespace dpcl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log(exp(a) - exp(b)); requires a >= b up to rounding.
double LogSub(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

// log(expm1(x)) for x > 0 without overflow.
double LogExpm1(double x) {
  if (x > 30.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

double LogErfc(double x) {
  if (x < 20.0) return std::log(std::erfc(x));
  // Asymptotic expansion of erfc for large positive arguments.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) -
                        15.0 / (8.0 * x2 * x2 * x2);
  return -x2 - std::log(x) - 0.5 * std::log(M_PI) + std::log(series);
}

double LogAbsBinomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Sign of C(alpha, i) for real alpha > 0 and integer i >= 0: only the
// Gamma(alpha - i + 1) factor can be negative.
int BinomialSign(double alpha, double i) {
  const double x = alpha - i + 1.0;
  if (x > 0.0) return 1;
  return static_cast<std::int64_t>(std::ceil(-x)) % 2 == 1 ? -1 : 1;
}

double LogAInteger(double q, double sigma, std::int64_t alpha) {
  double log_a = kNegInf;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (std::int64_t k = 0; k <= alpha; ++k) {
    const double kd = static_cast<double>(k);
    const double term = LogAbsBinomial(static_cast<double>(alpha), kd) +
                        kd * log_q + static_cast<double>(alpha - k) * log_1mq +
                        (kd * kd - kd) / (2.0 * sigma * sigma);
    log_a = LogAdd(log_a, term);
  }
  return log_a;
}

double LogAFractional(double q, double sigma, double alpha) {
  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double sqrt2_sigma = std::sqrt(2.0) * sigma;
  for (std::int64_t i = 0;; ++i) {
    const double id = static_cast<double>(i);
    const double j = alpha - id;
    const double log_coef = LogAbsBinomial(alpha, id);
    const int sign = BinomialSign(alpha, id);
    const double log_t0 = log_coef + id * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + id * log_1mq;
    const double log_e0 = std::log(0.5) + LogErfc((id - z0) / sqrt2_sigma);
    const double log_e1 = std::log(0.5) + LogErfc((z0 - j) / sqrt2_sigma);
    const double log_s0 = log_t0 + (id * id - id) / (2.0 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (sign > 0) {
      log_a0 = LogAdd(log_a0, log_s0);
      log_a1 = LogAdd(log_a1, log_s1);
    } else {
      log_a0 = LogSub(log_a0, log_s0);
      log_a1 = LogSub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30.0 && id > alpha) break;
    if (i > 100000) break;
  }
  return LogAdd(log_a0, log_a1);
}

}  // namespace

std::string_view ToString(CompositionMode mode) {
  switch (mode) {
    case CompositionMode::kParallel:
      return "parallel";
    case CompositionMode::kSequentialBasic:
      return "sequential_basic";
    case CompositionMode::kParallelMultiAdjacent:
      return "parallel_multi_adjacent";
  }
  return "unknown";
}

CompositionMode ParseCompositionMode(std::string_view name) {
  if (name == "parallel") return CompositionMode::kParallel;
  if (name == "sequential_basic" || name == "sequential") {
    return CompositionMode::kSequentialBasic;
  }
  if (name == "parallel_multi_adjacent") {
    return CompositionMode::kParallelMultiAdjacent;
  }
  throw InvalidArgument("unknown composition mode '" + std::string(name) + "'");
}

PrivacyLedger PrivacyLedger::RecordRelease(ReleaseRecord record) const {
  if (record.task_index < 1) {
    throw InvalidArgument("task index must be >= 1");
  }
  ValidateBudget(record.budget);
  PrivacyLedger next = *this;
  next.records_.push_back(std::move(record));
  return next;
}

PrivacyBudget PrivacyLedger::Total() const {
  if (records_.empty()) return {0.0, 0.0};
  double eps_max = 0.0;
  double delta_max = 0.0;
  double eps_sum = 0.0;
  double delta_sum = 0.0;
  for (const ReleaseRecord& r : records_) {
    eps_max = std::max(eps_max, r.budget.epsilon);
    delta_max = std::max(delta_max, r.budget.delta);
    eps_sum += r.budget.epsilon;
    delta_sum += r.budget.delta;
  }
  switch (mode_) {
    case CompositionMode::kParallel: {
      std::set<std::string_view> scopes;
      for (const ReleaseRecord& r : records_) {
        if (!scopes.insert(r.unit_scope).second) {
          throw ScopeViolation(
              "parallel composition requires disjoint unit scopes; scope '" +
              r.unit_scope + "' is used by more than one release");
        }
      }
      return {eps_max, delta_max};
    }
    case CompositionMode::kSequentialBasic:
      return {eps_sum, delta_sum};
    case CompositionMode::kParallelMultiAdjacent: {
      const double n = static_cast<double>(records_.size());
      return {n * eps_max, n * delta_max};
    }
  }
  return {0.0, 0.0};
}

bool PrivacyLedger::EachReleaseWithinSequentialTotal() const {
  PrivacyLedger sequential(CompositionMode::kSequentialBasic);
  sequential.records_ = records_;
  const PrivacyBudget total = sequential.Total();
  return std::all_of(records_.begin(), records_.end(),
                     [&](const ReleaseRecord& r) {
                       return r.budget.epsilon <= total.epsilon &&
                              r.budget.delta <= total.delta;
                     });
}

nlohmann::json PrivacyLedger::ToJson() const {
  nlohmann::json releases = nlohmann::json::array();
  for (const ReleaseRecord& r : records_) {
    releases.push_back({{"task", r.task_index},
                        {"epsilon", r.budget.epsilon},
                        {"delta", r.budget.delta},
                        {"scope", r.unit_scope}});
  }
  nlohmann::json out = {{"mode", std::string(ToString(mode_))},
                        {"releases", std::move(releases)}};
  try {
    const PrivacyBudget total = Total();
    out["total"] = {{"epsilon", total.epsilon}, {"delta", total.delta}};
  } catch (const ScopeViolation& e) {
    out["total"] = nullptr;
    out["error"] = e.what();
  }
  return out;
}

double GroupDpDelta(const GroupDpQuery& query) {
  if (!(query.epsilon > 0.0) || std::isinf(query.epsilon)) {
    throw InvalidArgument("group DP needs finite epsilon > 0");
  }
  if (!(query.delta >= 0.0 && query.delta < 1.0)) {
    throw InvalidArgument("group DP needs delta in [0, 1)");
  }
  if (query.k < 1) throw InvalidArgument("group size k must be >= 1");
  if (query.delta == 0.0) return 0.0;
  if (query.k == 1) return query.delta;
  const double k = static_cast<double>(query.k);
  const double log_delta_k = std::log(query.delta) +
                             LogExpm1(k * query.epsilon) -
                             LogExpm1(query.epsilon);
  return log_delta_k >= 0.0 ? 1.0 : std::exp(log_delta_k);
}

double SubsampledGaussianRdp(double sample_rate, double noise_multiplier,
                             double alpha) {
  if (!(sample_rate >= 0.0 && sample_rate <= 1.0)) {
    throw InvalidArgument("sample rate must lie in [0, 1]");
  }
  if (!(noise_multiplier > 0.0)) {
    throw InvalidArgument("noise multiplier must be positive");
  }
  if (!(alpha > 1.0)) throw InvalidArgument("RDP order must exceed 1");
  if (sample_rate == 0.0 || std::isinf(noise_multiplier)) return 0.0;
  if (sample_rate == 1.0) {
    return alpha / (2.0 * noise_multiplier * noise_multiplier);
  }
  const double log_a =
      alpha == std::floor(alpha)
          ? LogAInteger(sample_rate, noise_multiplier,
                        static_cast<std::int64_t>(alpha))
          : LogAFractional(sample_rate, noise_multiplier, alpha);
  return std::max(0.0, log_a / (alpha - 1.0));
}

const std::vector<double>& DefaultRdpOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> v;
    for (int i = 5; i <= 255 * 4; ++i) v.push_back(i * 0.25);
    return v;
  }();
  return orders;
}

double DpSgdEpsilon(double noise_multiplier, double sample_rate,
                    std::int64_t steps, double delta) {
  if (!(noise_multiplier > 0.0)) {
    throw InvalidArgument("noise multiplier must be positive");
  }
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw InvalidArgument("sample rate must lie in (0, 1]");
  }
  if (steps < 0) throw InvalidArgument("steps must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
  if (steps == 0 || std::isinf(noise_multiplier)) return 0.0;
  const double log_inv_delta = std::log(1.0 / delta);
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : DefaultRdpOrders()) {
    const double rdp = SubsampledGaussianRdp(sample_rate, noise_multiplier, alpha);
    const double eps =
        static_cast<double>(steps) * rdp + log_inv_delta / (alpha - 1.0);
    best = std::min(best, eps);
  }
  return best;
}

double CalibrateNoiseMultiplier(double epsilon, double sample_rate,
                                std::int64_t steps, double delta) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (std::isinf(epsilon) || steps == 0) return 0.0;
  auto eps_at = [&](double nm) {
    return DpSgdEpsilon(nm, sample_rate, steps, delta);
  };
  double hi = 1.0;
  while (eps_at(hi) > epsilon) {
    hi *= 2.0;
    if (hi > 1e6) {
      throw InvalidArgument("cannot reach the requested epsilon with the "
                            "given sampling rate and step count");
    }
  }
  double lo = hi / 2.0;
  while (lo > 1e-3 && eps_at(lo) <= epsilon) lo /= 2.0;
  for (int i = 0; i < 40 && (hi - lo) > 1e-4 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) > epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace dpcl
