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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dpcl/accountant.h"
#include "dpcl/attack_sim.h"
#include "dpcl/cosine_classifier.h"
#include "dpcl/dpsgd_ensemble.h"
#include "dpcl/errors.h"
#include "dpcl/experiment.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"
#include "dpcl/streams.h"

namespace dpcl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  std::string name;
  double time_limit_s;
  std::function<void(Outcome&)> body;
};

bool Run(const Criterion& c) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "[exception: " << e.what() << "] ";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= c.time_limit_s) {
    out.pass = false;
    out.detail << "[over time limit " << c.time_limit_s << " s] ";
  }
  std::printf("%s %s: %s(%.2f s)\n", out.pass ? "PASS" : "FAIL", c.name.c_str(),
              out.detail.str().c_str(), secs);
  std::fflush(stdout);
  return out.pass;
}

void ClassLossCurveCriterion(Outcome& out) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const auto rows = ClassLossCurve({1.0}, 1e-7, 13);
  const double keep12 = rows[11].drop_probability;
  const double keep13 = rows[12].drop_probability;
  Big oracle = 0;
  for (int i = 0; i < 12; ++i) oracle += boost::multiprecision::exp(Big(i)) * Big(1e-7);
  const double d12 = GroupDpDelta({1.0, 1e-7, 12});
  const double rel = std::abs(d12 - oracle.convert_to<double>()) / oracle.convert_to<double>();
  out.detail << "1-d12=" << keep12 << " 1-d13=" << keep13 << " rel_err=" << rel << " ";
  out.Check(rows[11].k == 12 && rows[12].k == 13, "row order");
  out.Check(keep12 >= 0.99, "1-d12 >= 0.99");
  out.Check(keep13 < 0.99, "1-d13 < 0.99");
  out.Check(rel <= 1e-12, "d12 relative error <= 1e-12");
}

void AttackCriterion(Outcome& out) {
  const GameResult data = RunGame(SyntheticGame(LabelPolicy::Data(), 1000, 1));
  const GameResult prior = RunGame(SyntheticGame(LabelPolicy::Prior({}), 1000, 2));
  const double eps = 1.0;
  const double tau = 2.0;
  const std::uint64_t trials = 100000;
  const GameResult learned =
      RunGame(SyntheticGame(LabelPolicy::Learned(tau, eps), trials, 3));
  const double p = 1.0 - LaplaceTail(tau - 1.0, {1.0 / eps});
  const double freq = learned.with_challenge.rate();
  const double se =
      std::sqrt(p * (1 - p) / static_cast<double>(learned.with_challenge.trials));
  out.detail << "data=" << data.advantage << " prior=" << prior.advantage
             << " singleton_release=" << freq << " expected=" << p << " se=" << se << " ";
  out.Check(data.advantage == 1.0, "data advantage == 1");
  out.Check(prior.advantage == 0.0, "prior advantage == 0");
  out.Check(data.with_challenge.trials == 500 && data.without_challenge.trials == 500,
            "balanced worlds");
  out.Check(std::abs(freq - p) <= 3 * se, "release frequency within 3 SE");
}

void CalibrationCriterion(Outcome& out) {
  double worst = 0.0;
  for (double eps : {0.5, 1.0, 8.0}) {
    for (double delta : {1e-5, 1e-7}) {
      const GaussianParams g = CalibrateGaussian({eps, delta}, 1.0);
      const double err = std::abs(GaussianDelta(eps, g.sigma, 1.0) - delta);
      worst = std::max(worst, err);
      out.Check(err <= 1e-9, "delta roundtrip at eps=" + std::to_string(eps));
      out.Check(g.sigma <= ClassicalGaussianSigma({eps, delta}, 1.0),
                "sigma <= classical at eps=" + std::to_string(eps));
    }
  }
  out.detail << "max |delta error|=" << worst << " ";
}

PrivacyLedger TenReleases(CompositionMode mode, bool distinct) {
  PrivacyLedger ledger(mode);
  for (int t = 1; t <= 10; ++t) {
    ledger = ledger.RecordRelease(
        {t, {1.0, 1e-5}, distinct ? "task-" + std::to_string(t) : "shared"});
  }
  return ledger;
}

void CompositionCriterion(Outcome& out) {
  const PrivacyBudget par = TenReleases(CompositionMode::kParallel, true).Total();
  const PrivacyBudget seq = TenReleases(CompositionMode::kSequentialBasic, true).Total();
  const PrivacyBudget multi =
      TenReleases(CompositionMode::kParallelMultiAdjacent, true).Total();
  out.detail << "parallel=(" << par.epsilon << ", " << par.delta << ") sequential=("
             << seq.epsilon << ", " << seq.delta << ") multi=(" << multi.epsilon << ", "
             << multi.delta << ") ";
  out.Check(par == (PrivacyBudget{1.0, 1e-5}), "parallel total");
  out.Check(seq == (PrivacyBudget{10.0, 1e-4}), "sequential total");
  out.Check(multi == (PrivacyBudget{10.0, 1e-4}), "multi-adjacent total");
  bool collided = false;
  try {
    (void)TenReleases(CompositionMode::kParallel, false).Total();
  } catch (const ScopeViolation&) {
    collided = true;
  }
  out.Check(collided, "scope collision raises");
}

void CosineInvarianceCriterion(Outcome& out) {
  const LabeledDataset d = SynthMixture(10, 100, 16, 1.0, 11);
  const LabelSet all = d.data.Labels();
  const ReleasedLabelSpace released{all, Provenance::kPrior, false};
  auto final_table = [&](StreamMode mode) {
    const TaskStream s =
        MakeStream(d, 10, mode, {.disjoint_fraction = 0.3, .imbalance = 4.0, .seed = 5});
    ClassSumTable table(d.data.dim());
    for (const Task& task : s.tasks) {
      table = UpdateSums(table, task.data, released, {0.0, 1.0}, 0).table;
    }
    return table;
  };
  const ClassSumTable base = final_table(StreamMode::kDisjoint);
  double worst = 0.0;
  for (StreamMode mode : {StreamMode::kIBlurry, StreamMode::kSiBlurry}) {
    const ClassSumTable other = final_table(mode);
    out.Check(other.sums.size() == base.sums.size(), "same classes");
    for (const auto& [label, sum] : base.sums) {
      for (std::size_t k = 0; k < sum.size(); ++k) {
        worst = std::max(worst, std::abs(other.sums.at(label)[k] - sum[k]));
      }
    }
  }
  out.detail << "samples=" << d.data.size() << " max |delta|=" << worst << " ";
  out.Check(worst <= 1e-6, "component-wise |delta| <= 1e-6");
}

void DpSgdCriterion(Outcome& out) {
  const LabeledDataset d = SynthMixture(5, 100, 16, 8.0, 21);
  const ReleasedLabelSpace released{d.data.Labels(), Provenance::kPrior, false};

  DpSgdConfig noisy;
  noisy.clip_norm = 0.5;
  noisy.noise_multiplier = 1.0;
  noisy.epochs = 5;
  noisy.seed = 1;
  double max_norm = 0.0;
  std::int64_t observed = 0;
  TrainHead(d.data, released, noisy, [&](std::int64_t, double norm) {
    max_norm = std::max(max_norm, norm);
    ++observed;
  });
  // One ulp of slack for the rescaling product.
  out.Check(observed > 0 && max_norm <= std::nextafter(noisy.clip_norm, kInf),
            "clipped norms <= C");

  double worst_rel = 0.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  LinearHead head = LinearHead::Zeros(released.labels, 16);
  for (double& w : head.weights()) w = normal(rng);
  for (double& b : head.bias()) b = normal(rng);
  for (int s = 0; s < 5; ++s) {
    std::vector<double> x(16);
    for (double& v : x) v = normal(rng);
    const LabelId y{static_cast<std::uint32_t>(s)};
    const SoftmaxGradient g = SoftmaxCrossEntropyGradient(head, x, y);
    const double h = 1e-4;
    auto loss_at = [&](std::size_t k, double offset) {
      LinearHead moved = head;
      moved.weights()[k] += offset;
      return SoftmaxCrossEntropyGradient(moved, x, y).loss;
    };
    for (std::size_t k = 0; k < head.weights().size(); ++k) {
      // Fourth-order central stencil.
      const double fd = (-loss_at(k, 2 * h) + 8 * loss_at(k, h) - 8 * loss_at(k, -h) +
                         loss_at(k, -2 * h)) /
                        (12 * h);
      worst_rel = std::max(worst_rel, std::abs(g.weights[k] - fd) /
                                          std::max(std::abs(fd), 1e-6));
    }
  }
  out.Check(worst_rel <= 1e-4, "finite differences within 1e-4 relative");

  DpSgdConfig quiet;
  quiet.noise_multiplier = 1e-6;
  quiet.epochs = 5;
  quiet.seed = 2;
  const LinearHead trained = TrainHead(d.data, released, quiet).head;
  std::size_t correct = 0;
  for (const Record& r : d.data.records()) {
    const std::vector<double> x(r.values.begin(), r.values.end());
    correct += trained.Predict(x) == r.label;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(d.data.size());
  out.detail << "max clipped norm=" << max_norm << " (C=" << noisy.clip_norm
             << ") fd rel_err=" << worst_rel << " train acc=" << acc << " ";
  out.Check(acc >= 0.95, "train accuracy >= 0.95");
}

ExperimentConfig Benchmark() {
  ExperimentConfig cfg;
  cfg.synth = {.classes = 50, .per_class = 40, .dim = 32, .separation = 1.0, .seed = 0};
  cfg.tasks = 10;
  cfg.repeats = 5;
  cfg.budget = {1.0, 1e-5};
  return cfg;
}

void OrderingCriterion(Outcome& out) {
  std::map<std::pair<Method, bool>, double> median;
  for (Method m : {Method::kCosine, Method::kEnsemble, Method::kNaive, Method::kFull}) {
    for (bool noiseless : {false, true}) {
      ExperimentConfig cfg = Benchmark();
      cfg.method = m;
      if (noiseless) cfg.budget.epsilon = kInf;
      median[{m, noiseless}] = RunExperiment(cfg).final_avg_acc.median;
      out.detail << ToString(m) << (noiseless ? "@inf=" : "@1=") << median[{m, noiseless}]
                 << " ";
    }
  }
  out.Check(median[{Method::kFull, false}] >= median[{Method::kEnsemble, false}],
            "full >= ensemble");
  out.Check(median[{Method::kEnsemble, false}] >= median[{Method::kNaive, false}],
            "ensemble >= naive");
  out.Check(median[{Method::kCosine, true}] >= median[{Method::kCosine, false}],
            "cosine noiseless >= eps 1");
  out.Check(median[{Method::kEnsemble, true}] >= median[{Method::kEnsemble, false}],
            "ensemble noiseless >= eps 1");
}

void DummyCriterion(Outcome& out) {
  ExperimentConfig cfg = Benchmark();
  cfg.budget.epsilon = kInf;
  const std::vector<SweepPoint> points = SweepDummyMultiplier(cfg, {1, 10, 100, 1000});
  double lowest = 1.0;
  for (const SweepPoint& p : points) {
    out.detail << "m=" << p.x << ":" << p.final_avg_acc.median << " ";
    lowest = std::min(lowest, p.final_avg_acc.median);
  }
  const double loss = points.front().final_avg_acc.median - lowest;
  out.detail << "loss=" << loss << " ";
  out.Check(loss <= 0.02, "loss <= 2 points");
}

}  // namespace
}  // namespace dpcl

int main() {
  using dpcl::Criterion;
  const std::vector<Criterion> criteria = {
      {"class-loss curve threshold", 1.0, dpcl::ClassLossCurveCriterion},
      {"label-space attack game", 30.0, dpcl::AttackCriterion},
      {"gaussian calibration roundtrip", 1.0, dpcl::CalibrationCriterion},
      {"composition arithmetic", 1.0, dpcl::CompositionCriterion},
      {"cosine partition invariance", 10.0, dpcl::CosineInvarianceCriterion},
      {"dp-sgd correctness", 60.0, dpcl::DpSgdCriterion},
      {"benchmark ordering", 600.0, dpcl::OrderingCriterion},
      {"dummy-label robustness", 300.0, dpcl::DummyCriterion},
  };
  int failed = 0;
  for (const Criterion& c : criteria) failed += dpcl::Run(c) ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
