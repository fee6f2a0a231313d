// Copyright 2026 The shuttlesim Authors
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
#include <string>
#include <vector>

#include "shuttlesim/calibration.hpp"
#include "shuttlesim/cli.hpp"
#include "shuttlesim/experiments.hpp"
#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/io.hpp"
#include "shuttlesim/route_choice.hpp"

namespace py = pybind11;
using namespace shuttlesim;

namespace {

py::object optional_value(const std::optional<double>& v) {
  return v ? py::cast(*v) : py::none();
}

py::dict group_dict(const GroupMetrics& g) {
  py::dict d;
  d["ratio"] = optional_value(g.ratio);
  d["speed_mph"] = optional_value(g.speed_mph);
  d["traversals"] = g.traversals;
  return d;
}

py::dict run_scenario(const std::string& fixture, const std::string& scenario, const std::string& period,
                      int replications, std::uint64_t seed, double duration_s, double warmup_s) {
  const Fixture fx = fixture_by_name(fixture);
  const Network net = Network::build(fx.network);
  ExperimentSetup setup;
  setup.net = &net;
  setup.offpeak = fx.offpeak;
  setup.peak = fx.peak;
  setup.shuttle_routes = fx.shuttle_routes;
  setup.config.duration_s = duration_s;
  setup.config.warmup_s = warmup_s;
  setup.config.record_trajectories = false;
  const Period p = period_from_string(period);
  MetricsReport report;
  {
    py::gil_scoped_release release;
    report = run_matrix(setup, {scenario_by_id(scenario)}, {p}, replications, seed);
  }
  const CellResult& cell = report.cells.front();
  py::dict out;
  out["scenario"] = cell.scenario;
  out["period"] = std::string(to_string(cell.period));
  out["aggregated"] = group_dict(cell.aggregated);
  py::dict groups;
  for (std::size_t g = 0; g < report.groups.size(); ++g) groups[py::str(report.groups[g])] = group_dict(cell.groups[g]);
  out["groups"] = groups;
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Microscopic traffic simulation of mixed shuttle and car traffic.";
  m.attr("__version__") = SHUTTLESIM_VERSION;

  m.def("geh", &geh, py::arg("simulated"), py::arg("observed"), "GEH statistic of an hourly flow pair.");
  m.def("mape", &mape, py::arg("observed"), py::arg("simulated"), "Mean absolute percentage error, in percent.");
  m.def(
      "logit_probabilities",
      [](const std::vector<double>& costs, double scale) { return logit_probabilities(costs, scale); },
      py::arg("costs"), py::arg("scale"), "Multinomial logit choice probabilities for path costs.");
  m.def("fixture_names", [] { return std::vector<std::string>{"corridor", "district", "ring"}; });
  m.def(
      "fixture_network",
      [](const std::string& name) { return io::network_to_json(fixture_by_name(name).network).dump(2); },
      py::arg("name"), "Network JSON of a built-in fixture.");
  m.def("scenario_ids", [] {
    std::vector<std::string> ids;
    for (const auto& s : standard_scenarios()) ids.push_back(s.id);
    return ids;
  });
  m.def("run_scenario", &run_scenario, py::arg("fixture"), py::arg("scenario") = "S0",
        py::arg("period") = "offpeak", py::arg("replications") = 1, py::arg("seed") = 1,
        py::arg("duration_s") = 3600.0, py::arg("warmup_s") = 600.0,
        "Runs replications of one scenario on a fixture and returns delay ratio and speed metrics.");
  m.def("cli", &cli, py::arg("args"), "Runs the command-line tool in process; returns (exit code, stdout, stderr).");

  py::register_exception<NetworkError>(m, "NetworkError", PyExc_ValueError);
  py::register_exception<RoutingError>(m, "RoutingError", PyExc_RuntimeError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
}
