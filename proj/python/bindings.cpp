// SPDX-License-Identifier: Apache-2.0
//
// ddchan - joint element/group sparse estimation of delay-Doppler channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Python bindings for the core library (module ddchan._ddchan).

#include "ddchan/harness.hpp"
#include "ddchan/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ddchan;

namespace
{
GroupPartition partition_from_groups(const std::vector<std::vector<Index>> &groups, Index n)
{
    GroupPartition p;
    p.size = n;
    p.groups = groups;
    p.n_r3 = p.count();
    p.validate();
    return p;
}

py::dict trial_dict(const Trial &t)
{
    py::dict d;
    d["seed"] = t.seed;
    d["grid"] = t.grid;
    d["truth"] = t.truth.x;
    d["support"] = t.support;
    d["A"] = t.A;
    d["clean"] = t.clean;
    d["regions"] = t.regions;
    d["groups"] = t.partition.groups;
    d["scenario_csv"] = scenario_to_csv(t.scenario);
    return d;
}
} // namespace

PYBIND11_MODULE(_ddchan, m)
{
    m.doc() = "Joint element/group sparse estimation of delay-Doppler channels";

    py::class_<Regularizer>(m, "Regularizer")
        .def_static("soft", &Regularizer::soft)
        .def_static("scad", &Regularizer::scad, py::arg("mu"))
        .def_static("mcp", &Regularizer::mcp, py::arg("mu"))
        .def_static("lp", &Regularizer::lp, py::arg("p"))
        .def_static("parse", &Regularizer::parse)
        .def_property_readonly("name", &Regularizer::name)
        .def("value", &Regularizer::value, py::arg("x"), py::arg("lam"))
        .def("prox", &Regularizer::prox, py::arg("x"), py::arg("lam"), py::arg("weight") = 1.0)
        .def("__repr__", [](const Regularizer &r) { return "Regularizer('" + r.name() + "')"; });

    m.def("prox_soft", &prox_soft);
    m.def("prox_scad", &prox_scad);
    m.def("prox_mcp", &prox_mcp);
    m.def(
        "prox_nested",
        [](const CVector &b, double lambda_group, double lambda_elem, double rho, const Regularizer &f_e,
           const Regularizer &f_g) { return prox_nested(b, GroupProxParams(lambda_group, lambda_elem, rho), f_e, f_g); },
        py::arg("b"), py::arg("lambda_group"), py::arg("lambda_elem"), py::arg("rho") = 1.0,
        py::arg("f_elem") = Regularizer::soft(), py::arg("f_group") = Regularizer::soft());

    py::class_<DelayDopplerGrid>(m, "DelayDopplerGrid")
        .def(py::init([](double ts, Index n_r, Index k, Index mm, double t0) {
                 DelayDopplerGrid g{ts, n_r, k, mm, t0};
                 g.validate();
                 return g;
             }),
             py::arg("sample_period"), py::arg("block_length"), py::arg("doppler_half"), py::arg("delay_taps"),
             py::arg("t0") = 0.0)
        .def_readwrite("sample_period", &DelayDopplerGrid::sample_period)
        .def_readwrite("block_length", &DelayDopplerGrid::block_length)
        .def_readwrite("doppler_half", &DelayDopplerGrid::doppler_half)
        .def_readwrite("delay_taps", &DelayDopplerGrid::delay_taps)
        .def_readwrite("t0", &DelayDopplerGrid::t0)
        .def_property_readonly("size", &DelayDopplerGrid::size)
        .def("index", &DelayDopplerGrid::index);

    py::class_<Regions>(m, "Regions")
        .def(py::init([](Index m0, Index dm, Index m_max, Index k_s, Index dk, Index k_max) {
            return Regions{m0, dm, m_max, k_s, dk, k_max};
        }))
        .def_readwrite("m0", &Regions::m0)
        .def_readwrite("dm", &Regions::dm)
        .def_readwrite("m_max", &Regions::m_max)
        .def_readwrite("k_s", &Regions::k_s)
        .def_readwrite("dk", &Regions::dk)
        .def_readwrite("k_max", &Regions::k_max)
        .def("record", &Regions::to_record)
        .def("__eq__", [](const Regions &a, const Regions &b) { return a == b; })
        .def("__repr__", [](const Regions &r) {
            const auto a = r.to_record();
            std::string s = "Regions(";
            for (std::size_t i = 0; i < a.size(); ++i)
                s += (i ? ", " : "") + std::to_string(a[i]);
            return s + ")";
        });

    py::class_<PulseShape>(m, "PulseShape")
        .def(py::init([](double rolloff, double support, double ts) { return PulseShape{rolloff, support, ts}; }),
             py::arg("rolloff"), py::arg("support"), py::arg("sample_period"));
    m.def("combined_pulse", &combined_pulse);
    m.def("dirichlet_w", &dirichlet_w);
    m.def("build_leakage_matrix", &build_leakage_matrix);
    m.def(
        "build_pilot_matrix",
        [](const DelayDopplerGrid &g, std::uint64_t seed) {
            return build_pilot_matrix(generate_pilot(PilotKind::Gaussian, g, seed), g);
        },
        py::arg("grid"), py::arg("seed"));
    m.def(
        "build_sensing_matrix",
        [](const DelayDopplerGrid &g, const PulseShape &p, std::uint64_t seed) {
            return build_sensing_matrix(generate_pilot(PilotKind::Gaussian, g, seed), g, p);
        },
        py::arg("grid"), py::arg("pulse"), py::arg("seed"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_static("preset", &preset_config)
        .def_static("from_json", &config_from_json)
        .def("to_json", &config_to_json)
        .def("validate", &ExperimentConfig::validate)
        .def_readwrite("snr_db", &ExperimentConfig::snr_db)
        .def_readwrite("estimators", &ExperimentConfig::estimators)
        .def_readwrite("seeds", &ExperimentConfig::seeds)
        .def_readwrite("calibration_seeds", &ExperimentConfig::calibration_seeds)
        .def_readwrite("lambda_grid", &ExperimentConfig::lambda_grid)
        .def_readwrite("rho", &ExperimentConfig::rho)
        .def_readwrite("max_iter", &ExperimentConfig::max_iter)
        .def_readwrite("leakage", &ExperimentConfig::leakage)
        .def_readwrite("off_grid", &ExperimentConfig::off_grid)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def_readwrite("grid", &ExperimentConfig::grid);

    m.def("known_estimators", &known_estimators);
    m.def("nmse", &nmse);
    m.def("prepare_trial", [](const ExperimentConfig &cfg, std::uint64_t seed) {
        return trial_dict(prepare_trial(cfg, seed));
    });
    m.def(
        "estimate",
        [](const ExperimentConfig &cfg, std::uint64_t seed, const std::string &estimator, double snr_db,
           double lambda_units) {
            const Trial t = prepare_trial(cfg, seed);
            const TrialSolver solver(cfg, t);
            const auto out = solver.run(estimator, trial_measurement(t, snr_db), lambda_units);
            py::dict d;
            d["x_hat"] = out.x_hat;
            d["iterations"] = out.iterations;
            d["nmse"] = nmse(out.x_hat, t.truth.x);
            return d;
        },
        py::arg("cfg"), py::arg("seed"), py::arg("estimator"), py::arg("snr_db"), py::arg("lambda_units") = 0.1);

    m.def(
        "admm_solve",
        [](const CVector &y, const CMatrix &A, const std::vector<std::vector<Index>> &groups, double lambda_group,
           double lambda_elem, double rho, const Regularizer &f_group, int max_iter, double tol_rel) {
            AdmmConfig c;
            c.lambda_group = lambda_group;
            c.lambda_elem = lambda_elem;
            c.rho = rho;
            c.f_group = f_group;
            c.max_iter = max_iter;
            c.tol_rel = tol_rel;
            const auto part = groups.empty() ? singleton_partition(A.cols()) : partition_from_groups(groups, A.cols());
            const auto r = admm_solve(y, A, part, c);
            return py::make_tuple(r.x_hat, r.iterations);
        },
        py::arg("y"), py::arg("A"), py::arg("groups") = std::vector<std::vector<Index>>{}, py::arg("lambda_group"),
        py::arg("lambda_elem"), py::arg("rho") = 1.0, py::arg("f_group") = Regularizer::soft(),
        py::arg("max_iter") = 500, py::arg("tol_rel") = 1e-6);

    m.def(
        "run_benchmark",
        [](const ExperimentConfig &cfg) {
            py::gil_scoped_release release;
            return benchmark_csv(run_benchmark(cfg));
        },
        "Run the sweep and return the benchmark table as CSV text");

    m.def("spreading_to_csv", [](const DelayDopplerGrid &g, const CVector &x) {
        return spreading_to_csv(SpreadingFunction(g, x));
    });
    m.def("spreading_from_csv", [](const std::string &text) {
        const auto h = spreading_from_csv(text);
        return py::make_tuple(h.grid, h.x);
    });
    m.def("regions_to_csv", &regions_to_csv);
    m.def("regions_from_csv", &regions_from_csv);

    py::register_exception_translator([](std::exception_ptr p) {
        try
        {
            if (p)
                std::rethrow_exception(p);
        }
        catch (const std::out_of_range &e)
        {
            PyErr_SetString(PyExc_IndexError, e.what());
        }
    });
}
