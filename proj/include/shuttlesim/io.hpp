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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shuttlesim/behavior.hpp"
#include "shuttlesim/calibration.hpp"
#include "shuttlesim/demand.hpp"
#include "shuttlesim/engine.hpp"
#include "shuttlesim/network.hpp"
#include "shuttlesim/route_choice.hpp"

namespace shuttlesim::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Reads a whole file. Throws std::runtime_error naming the path.
std::string read_file(const fs::path& path);
/// Writes atomically enough for batch use (truncate and write).
void write_file(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);

// Network file. Lengths default to metres and speeds to mph; a `units`
// object may declare {"length": "m"|"ft"|"mi", "speed": "mph"|"mps"|"kmh"}.
json network_to_json(const NetworkData& data);
NetworkData network_from_json(const json& j);
NetworkData load_network(const fs::path& path);

// Vehicle-class parameter file with `hdv` and `shuttle` objects. Distributed
// fields are {min, mean, dev, max}; speeds are in mph, lengths in metres.
json params_to_json(const VehicleClassParams& hdv, const VehicleClassParams& shuttle);
std::pair<VehicleClassParams, VehicleClassParams> params_from_json(const json& j);
std::pair<VehicleClassParams, VehicleClassParams> load_params(const fs::path& path);

// Demand file: {"centroids": [...], "off-peak": [[...]], "peak": [[...]]} in
// trips per hour, rows are origins.
struct DemandFile {
  OdMatrix offpeak;
  std::optional<OdMatrix> peak;
};
json demand_to_json(const DemandFile& d);
DemandFile demand_from_json(const json& j);
DemandFile load_demand(const fs::path& path);
json od_to_json(const OdMatrix& m);
OdMatrix od_from_json(const std::vector<std::string>& centroids, const json& rows);

// Assignment plan keyed by interval, OD pair and path index.
json plan_to_json(const AssignmentPlan& plan, const Network& net);
AssignmentPlan plan_from_json(const json& j, const Network& net);

// Simulation outputs.
std::string trajectories_csv(const SimOutput& out, const Network& net);
std::string detector_counts_csv(const SimOutput& out, const Network& net);
std::string traversals_csv(const SimOutput& out, const Network& net);
std::string vehicles_csv(const SimOutput& out);

// Trajectory logs: header lines `# trip:`, `# class:`, `# condition:`,
// `# route:` then rows `t_s,section_id,offset_m,speed_mps[,excluded]`. A new
// `# trip:` line starts the next log in the same file.
std::string trajectory_logs_text(const std::vector<TrajectoryLog>& logs);
std::vector<TrajectoryLog> parse_trajectory_logs(const std::string& text);
/// A file, or every regular file in a directory (sorted by name).
std::vector<TrajectoryLog> load_trajectory_logs(const fs::path& path);

// Observed detector counts.
struct DetectorObservation {
  std::string detector;
  double bin_start_s = 0.0;
  double count = 0.0;
};
std::vector<DetectorObservation> parse_detector_observations(const std::string& text);
std::vector<DetectorObservation> load_detector_observations(const fs::path& path);
std::string detector_observations_csv(const std::vector<DetectorObservation>& obs);
/// Hourly flow per detector id: mean count per bin scaled by 3600 / bin
/// width. Detectors are returned in first-appearance order.
std::vector<std::pair<std::string, double>> hourly_flows(const std::vector<DetectorObservation>& obs,
                                                         double bin_s = 300.0);

// Provenance.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);
struct Provenance {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // (label, content hash)
};
/// Comment block prefixed with `prefix` on every line ("# " for CSV).
std::string provenance_header(const Provenance& p, const std::string& prefix = "# ");
json provenance_json(const Provenance& p);

}  // namespace shuttlesim::io
