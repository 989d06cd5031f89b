// Copyright 2026 The vfbandit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python module _vfbandit: run configuration, simulation results, masks and
// the cost model. Matrices and vectors cross as float64 numpy arrays (copies).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <string>

#include "vfbandit/costs.hpp"
#include "vfbandit/experiment.hpp"
#include "vfbandit/fedsim.hpp"
#include "vfbandit/o3m.hpp"
#include "vfbandit/verify.hpp"

namespace py = pybind11;
using namespace vfbandit;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::array_t<double> to_numpy(const Vector& v) {
  py::array_t<double> out(v.dim());
  std::copy(v.values().begin(), v.values().end(), out.mutable_data());
  return out;
}

Matrix matrix_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

Vector vector_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return Vector(std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace

PYBIND11_MODULE(_vfbandit, m) {
  m.doc() = "Vertically federated contextual bandits: simulator core";

  py::enum_<Algorithm>(m, "Algorithm")
      .value("VFUCB", Algorithm::kVFUCB)
      .value("VFTS", Algorithm::kVFTS)
      .value("LinUCB", Algorithm::kLinUCB)
      .value("LinTS", Algorithm::kLinTS)
      .value("PartialLinUCB", Algorithm::kPartialLinUCB)
      .value("PartialLinTS", Algorithm::kPartialLinTS);

  py::enum_<CostAlgorithm>(m, "CostAlgorithm")
      .value("LinUCB", CostAlgorithm::kLinUCB)
      .value("LinTS", CostAlgorithm::kLinTS)
      .value("VFUCB", CostAlgorithm::kVFUCB)
      .value("VFTS", CostAlgorithm::kVFTS);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &RunConfig::algorithm)
      .def_readwrite("horizon", &RunConfig::horizon)
      .def_readwrite("arms", &RunConfig::arms)
      .def_readwrite("dim", &RunConfig::dim)
      .def_readwrite("partition", &RunConfig::partition)
      .def_readwrite("lam", &RunConfig::lambda)
      .def_readwrite("beta", &RunConfig::beta)
      .def_readwrite("v", &RunConfig::v)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("partial_ratio", &RunConfig::partial_ratio)
      .def_readwrite("context_sigma2", &RunConfig::context_sigma2)
      .def_readwrite("theta_sigma2", &RunConfig::theta_sigma2)
      .def_readwrite("noise_sigma2", &RunConfig::noise_sigma2)
      .def_readwrite("record_scores", &RunConfig::record_scores)
      .def_readwrite("coupled_ts", &RunConfig::coupled_ts)
      .def("validate", &RunConfig::validate);

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("arms", &RunResult::arm_sequence)
      .def_property_readonly("cumulative_regret", &RunResult::cumulative_regret)
      .def_property_readonly("regret",
                             [](const RunResult& r) {
                               py::array_t<double> out(r.records.size());
                               for (std::size_t t = 0; t < r.records.size(); ++t) {
                                 out.mutable_data()[t] = r.records[t].regret;
                               }
                               return out;
                             })
      .def_property_readonly("theta_norm",
                             [](const RunResult& r) {
                               py::array_t<double> out(r.records.size());
                               for (std::size_t t = 0; t < r.records.size(); ++t) {
                                 out.mutable_data()[t] = r.records[t].theta_norm;
                               }
                               return out;
                             })
      .def_property_readonly("mask",
                             [](const RunResult& r) -> py::object {
                               if (!r.mask) return py::none();
                               return to_numpy(*r.mask);
                             })
      .def_property_readonly("protocol_elements", [](const RunResult& r) { return r.ledger.protocol_elements(); })
      .def_property_readonly("truncated", [](const RunResult& r) { return r.truncated; });

  m.def("run", py::overload_cast<const RunConfig&>(&run), py::arg("config"),
        py::call_guard<py::gil_scoped_release>(), "Runs one simulation on its synthetic environment.");

  m.def(
      "random_orthogonal",
      [](std::size_t d, std::uint64_t seed) {
        Rng rng(seed);
        return to_numpy(random_orthogonal(d, rng));
      },
      py::arg("d"), py::arg("seed"));

  m.def(
      "privacy_witness",
      [](const py::array_t<double>& q1, const py::array_t<double>& x1, std::uint64_t seed) {
        Rng rng(seed);
        const PrivacyWitness w = privacy_witness(matrix_from(q1), vector_from(x1), rng);
        return py::make_tuple(to_numpy(w.q2), to_numpy(w.x2));
      },
      py::arg("q1"), py::arg("x1"), py::arg("seed"),
      "Returns (q2, x2) with q2 @ x2 == q1 @ x1 and x2 != x1.");

  m.def("comm_elements",
        [](std::uint64_t T, std::uint64_t K, std::uint64_t M, std::uint64_t d) {
          return comm_elements({T, K, M, d});
        },
        py::arg("T"), py::arg("K"), py::arg("M"), py::arg("d"));
  m.def("relative_cost",
        [](CostAlgorithm alg, std::uint64_t T, std::uint64_t K, std::uint64_t M, std::uint64_t d) {
          return relative_cost(alg, central_counterpart(alg), {T, K, M, d});
        },
        py::arg("algorithm"), py::arg("T"), py::arg("K"), py::arg("M"), py::arg("d"));

  m.def(
      "verify",
      [](std::uint64_t seed) {
        VerifyOptions opts;
        opts.base_seed = seed;
        py::dict out;
        for (const SuiteResult& s : run_verify(opts)) out[py::str(s.name)] = py::make_tuple(s.passed, s.detail);
        return out;
      },
      py::arg("seed") = 0, "Runs the self-check suites; maps suite name to (passed, detail).");

  m.def(
      "run_synthetic_spec",
      [](const std::string& path, std::size_t threads) {
        const ExperimentSpec spec = load_spec(std::filesystem::path(path));
        std::vector<SyntheticRun> runs;
        {
          py::gil_scoped_release release;
          runs = run_synthetic(spec, {threads, false});
        }
        py::dict out;
        for (const SyntheticRun& r : runs) {
          const std::string cell = spec.cell_name(r.cell);
          if (!out.contains(cell)) out[py::str(cell)] = py::list();
          out[py::str(cell)].cast<py::list>().append(r.result.cumulative_regret());
        }
        return out;
      },
      py::arg("path"), py::arg("threads") = 1,
      "Runs a synthetic spec file; maps cell name to per-repetition cumulative regret.");

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
}
