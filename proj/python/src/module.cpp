// Copyright 2026 The hgdagger Authors
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
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hgdagger/cli.hpp"
#include "hgdagger/ensemble.hpp"
#include "hgdagger/errors.hpp"
#include "hgdagger/evaluation.hpp"
#include "hgdagger/sim.hpp"
#include "hgdagger/training.hpp"

namespace py = pybind11;
using namespace hgdagger;

namespace
{

std::array<double, sim::kObservationSize> observation_array(const sim::Observation & obs)
{
  return obs.to_array();
}

}  // namespace

PYBIND11_MODULE(_hgdagger, m)
{
  m.doc() = "Simulator, ensemble policy and training entry points.";

  py::enum_<sim::Lane>(m, "Lane").value("left", sim::Lane::left).value("right", sim::Lane::right);

  py::class_<sim::ObstacleCar>(m, "ObstacleCar")
    .def_readonly("center_x", &sim::ObstacleCar::center_x)
    .def_readonly("lane", &sim::ObstacleCar::lane)
    .def_readonly("length", &sim::ObstacleCar::length)
    .def_readonly("width", &sim::ObstacleCar::width)
    .def_property_readonly("center_y", &sim::ObstacleCar::center_y);

  py::class_<sim::Scenario>(m, "Scenario")
    .def_readonly("rng_seed", &sim::Scenario::rng_seed)
    .def_readonly("road_length", &sim::Scenario::road_length)
    .def_readonly("obstacles", &sim::Scenario::obstacles);

  py::class_<sim::EgoState>(m, "EgoState")
    .def(
      py::init([](double x, double y, double theta, double s) { return sim::EgoState{x, y, theta, s}; }),
      py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("theta") = 0.0, py::arg("s") = 0.0)
    .def_readwrite("x", &sim::EgoState::x)
    .def_readwrite("y", &sim::EgoState::y)
    .def_readwrite("theta", &sim::EgoState::theta)
    .def_readwrite("s", &sim::EgoState::s)
    .def("__repr__", [](const sim::EgoState & st) {
      std::ostringstream out;
      out << "EgoState(x=" << st.x << ", y=" << st.y << ", theta=" << st.theta << ", s=" << st.s << ")";
      return out.str();
    });

  m.def(
    "generate_scenario", &sim::generate_scenario, py::arg("seed"), py::arg("road_length"),
    py::arg("jitter") = true);
  m.def(
    "step_dynamics",
    [](const sim::EgoState & st, double steer, double speed_cmd, double dt) {
      return sim::step_dynamics(st, {steer, speed_cmd}, dt);
    },
    py::arg("state"), py::arg("steer"), py::arg("speed_cmd"), py::arg("dt") = sim::kControlDt);
  m.def(
    "observe",
    [](const sim::EgoState & st, const sim::Scenario & s) { return observation_array(sim::observe(st, s)); },
    "Observation as [y, theta, s, l_left, l_right, d_left, d_right].");
  m.def("initial_state", &training::initial_state, py::arg("seed"));

  py::class_<nn::Ensemble>(m, "Ensemble")
    .def_property_readonly("size", &nn::Ensemble::size)
    .def(
      "predict",
      [](const nn::Ensemble & e, const std::array<double, sim::kObservationSize> & obs) {
        const auto p = nn::predict(e, sim::Observation::from_array(obs));
        return py::make_tuple(
          py::make_tuple(p.mean_action.steer, p.mean_action.speed_cmd), p.variance,
          nn::doubt_from_variance(p.variance));
      },
      "Returns ((steer, speed_cmd), variance, doubt).")
    .def("doubt", [](const nn::Ensemble & e, const std::array<double, sim::kObservationSize> & obs) {
      return nn::doubt(e, sim::Observation::from_array(obs));
    });
  m.def("load_checkpoint", [](const std::string & path) { return nn::load_checkpoint(path); });

  m.def(
    "compute_tau",
    [](const std::vector<double> & doubts) {
      InterventionLog log;
      for (double d : doubts) log.entries.push_back({d, 0, 0, 0.0});
      return training::compute_tau(log);
    },
    py::arg("doubts"));
  m.def(
    "bhattacharyya",
    [](const std::vector<double> & p, const std::vector<double> & q) {
      auto hist = [](const std::vector<double> & mass) {
        eval::Histogram h = eval::Histogram::uniform(0.0, 1.0, static_cast<int>(mass.size()));
        h.mass = mass;
        return h;
      };
      return eval::bhattacharyya(hist(p), hist(q));
    },
    "Distance between two histograms given as bin masses on a shared binning.");

  m.def(
    "run_command",
    [](const std::vector<std::string> & args) {
      std::ostringstream out, err;
      int code = 0;
      {
        py::gil_scoped_release release;
        code = cli::run_command(args, out, err);
      }
      return py::make_tuple(code, out.str(), err.str());
    },
    py::arg("args"), "Runs one CLI subcommand; returns (exit_code, stdout, stderr).");
  m.def("git_blob_sha1", [](const std::string & content) { return cli::git_blob_sha1(content); });

  m.attr("UndefinedThreshold") = py::register_exception<UndefinedThreshold>(m, "UndefinedThreshold");
}
