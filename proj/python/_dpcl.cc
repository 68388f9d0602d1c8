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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dpcl/accountant.h"
#include "dpcl/attack_sim.h"
#include "dpcl/emb1.h"
#include "dpcl/errors.h"
#include "dpcl/experiment.h"
#include "dpcl/label_space.h"
#include "dpcl/mechanisms.h"
#include "dpcl/streams.h"

namespace py = pybind11;

namespace dpcl {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

py::object FromJson(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::tuple ToArrays(const LabeledDataset& d) {
  const auto n = static_cast<py::ssize_t>(d.data.size());
  const auto k = static_cast<py::ssize_t>(d.data.dim());
  FloatArray values({n, k});
  LabelArray labels(n);
  auto v = values.mutable_unchecked<2>();
  auto l = labels.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const Record& r = d.data[static_cast<std::size_t>(i)];
    for (py::ssize_t j = 0; j < k; ++j) v(i, j) = r.values[static_cast<std::size_t>(j)];
    l(i) = r.label.value;
  }
  return py::make_tuple(values, labels, d.universe.names());
}

EmbeddingDataset FromArrays(const FloatArray& values, const LabelArray& labels) {
  if (values.ndim() != 2) throw ShapeError("values must be a 2-D array");
  if (labels.ndim() != 1 || labels.shape(0) != values.shape(0)) {
    throw ShapeError("labels must be a 1-D array with one entry per row");
  }
  const auto n = values.shape(0);
  const auto k = static_cast<std::size_t>(values.shape(1));
  auto v = values.unchecked<2>();
  auto l = labels.unchecked<1>();
  std::vector<Record> records;
  records.reserve(static_cast<std::size_t>(n));
  for (py::ssize_t i = 0; i < n; ++i) {
    Record r;
    r.values.resize(k);
    std::memcpy(r.values.data(), v.data(i, 0), k * sizeof(float));
    r.label = LabelId{l(i)};
    records.push_back(std::move(r));
  }
  return EmbeddingDataset(k, std::move(records));
}

LabelPolicy PolicyFromName(const std::string& name, double tau, double epsilon) {
  switch (ParseLabelPolicyKind(name)) {
    case LabelPolicyKind::kData:
      return LabelPolicy::Data();
    case LabelPolicyKind::kPrior:
      return LabelPolicy::Prior({});
    case LabelPolicyKind::kLearned:
      return LabelPolicy::Learned(tau, epsilon);
  }
  throw InvalidArgument("unknown policy '" + name + "'");
}

}  // namespace
}  // namespace dpcl

PYBIND11_MODULE(_dpcl, m) {
  using namespace dpcl;
  m.doc() = "Differentially private continual learning on frozen embeddings.";

  py::object base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<IntegrityError>(m, "IntegrityError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<MappingError>(m, "MappingError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ScopeViolation>(m, "ScopeViolation", base);
  py::register_exception<Unsupported>(m, "Unsupported", base);
  py::register_exception<DivergenceError>(m, "DivergenceError", base);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base);
  py::register_exception<NoClasses>(m, "NoClasses", base);

  // EMB1 files.
  m.def("load_embeddings",
        [](const std::filesystem::path& path) { return ToArrays(LoadEmbeddings(path)); },
        py::arg("path"), "Returns (values float32[n, dim], labels uint32[n], names).");
  m.def(
      "save_embeddings",
      [](const std::filesystem::path& path, const FloatArray& values,
         const LabelArray& labels, std::vector<std::string> names, std::size_t dummies) {
        SaveEmbeddings(FromArrays(values, labels), LabelUniverse(std::move(names), dummies),
                       path);
      },
      py::arg("path"), py::arg("values"), py::arg("labels"), py::arg("names"),
      py::arg("dummy_count") = 0);
  m.def(
      "inspect_embeddings",
      [](const std::filesystem::path& path) {
        const Emb1Header h = InspectEmbeddings(path);
        py::dict d;
        d["dim"] = h.dim;
        d["count"] = h.count;
        return d;
      },
      py::arg("path"));
  m.def(
      "synth_mixture",
      [](std::size_t classes, std::size_t per_class, std::size_t dim, double separation,
         std::uint64_t seed) {
        return ToArrays(SynthMixture(classes, per_class, dim, separation, seed));
      },
      py::arg("classes"), py::arg("per_class"), py::arg("dim"), py::arg("separation"),
      py::arg("seed") = 0);

  // Mechanisms.
  m.def(
      "calibrate_gaussian",
      [](double epsilon, double delta, double sensitivity) {
        return CalibrateGaussian({epsilon, delta}, sensitivity).sigma;
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("sensitivity") = 1.0);
  m.def("gaussian_delta", &GaussianDelta, py::arg("epsilon"), py::arg("sigma"),
        py::arg("sensitivity") = 1.0);
  m.def(
      "classical_gaussian_sigma",
      [](double epsilon, double delta, double sensitivity) {
        return ClassicalGaussianSigma({epsilon, delta}, sensitivity);
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("sensitivity") = 1.0);
  m.def(
      "laplace_tail", [](double x, double scale) { return LaplaceTail(x, {scale}); },
      py::arg("x"), py::arg("scale"));

  // Accounting.
  py::class_<PrivacyLedger>(m, "PrivacyLedger")
      .def(py::init([](const std::string& mode) {
             return PrivacyLedger(ParseCompositionMode(mode));
           }),
           py::arg("mode") = "sequential")
      .def(
          "record_release",
          [](const PrivacyLedger& l, int task, double epsilon, double delta,
             std::string scope) {
            return l.RecordRelease({task, {epsilon, delta}, std::move(scope)});
          },
          py::arg("task"), py::arg("epsilon"), py::arg("delta"), py::arg("scope"))
      .def("total",
           [](const PrivacyLedger& l) {
             const PrivacyBudget b = l.Total();
             return std::make_tuple(b.epsilon, b.delta);
           })
      .def_property_readonly("mode",
                             [](const PrivacyLedger& l) { return std::string(ToString(l.mode())); })
      .def("__len__", [](const PrivacyLedger& l) { return l.records().size(); })
      .def("to_json", [](const PrivacyLedger& l) { return FromJson(l.ToJson()); });
  m.def(
      "group_dp_delta",
      [](double epsilon, double delta, std::int64_t k) {
        return GroupDpDelta({epsilon, delta, k});
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("k"));
  m.def("dp_sgd_epsilon", &DpSgdEpsilon, py::arg("noise_multiplier"),
        py::arg("sample_rate"), py::arg("steps"), py::arg("delta"));
  m.def("calibrate_noise_multiplier", &CalibrateNoiseMultiplier, py::arg("epsilon"),
        py::arg("sample_rate"), py::arg("steps"), py::arg("delta"));

  // Label spaces.
  m.def("learned_release_probability", &LearnedReleaseProbability, py::arg("epsilon"),
        py::arg("tau"), py::arg("count"));
  m.def(
      "learned_release_delta",
      [](double epsilon, double tau, std::int64_t k, std::optional<double> group_delta) {
        const LearnedReleaseBound b = LearnedReleaseDelta(epsilon, tau, k, group_delta);
        py::dict d;
        d["delta"] = b.delta;
        d["delta_star"] = b.delta_star;
        d["terms"] = std::vector<double>(std::begin(b.terms), std::end(b.terms));
        d["group_drop_probability"] =
            b.group_drop_probability ? py::cast(*b.group_drop_probability) : py::none();
        return d;
      },
      py::arg("epsilon"), py::arg("tau"), py::arg("k") = 1, py::arg("group_delta") = py::none());
  m.def(
      "class_loss_curve",
      [](const std::vector<double>& epsilons, double delta, std::int64_t k_max) {
        py::list rows;
        for (const ClassLossPoint& p : ClassLossCurve(epsilons, delta, k_max)) {
          rows.append(py::make_tuple(p.epsilon, p.k, p.drop_probability));
        }
        return rows;
      },
      py::arg("epsilons"), py::arg("delta"), py::arg("k_max"),
      "Rows of (epsilon, k, 1 - delta_k).");

  // Attack game.
  m.def(
      "run_attack",
      [](const std::string& policy, std::uint64_t trials, std::uint64_t seed, double tau,
         double epsilon) {
        const GameConfig cfg =
            SyntheticGame(PolicyFromName(policy, tau, epsilon), trials, seed);
        py::gil_scoped_release release;
        const GameResult result = RunGame(cfg);
        py::gil_scoped_acquire acquire;
        return FromJson(GameReport(cfg, result));
      },
      py::arg("policy"), py::arg("trials") = 1000, py::arg("seed") = 0, py::arg("tau") = 2.0,
      py::arg("epsilon") = 1.0);

  // Experiments.
  m.def(
      "run_experiment",
      [](const std::string& config, const std::vector<std::string>& overrides,
         bool write) {
        const ExperimentConfig cfg = ParseConfig(config, overrides);
        MetricsReport report;
        {
          py::gil_scoped_release release;
          report = write ? RunAndWrite(cfg) : RunExperiment(cfg);
        }
        return FromJson(report.ToJson());
      },
      py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
      py::arg("write") = false,
      "Runs a config body with key=value overrides; returns the summary.");
}
