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
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shuttlesim/behavior.hpp"
#include "shuttlesim/demand.hpp"
#include "shuttlesim/network.hpp"
#include "shuttlesim/route_choice.hpp"

namespace shuttlesim {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using VehicleId = std::uint32_t;

/// Optional unscheduled pull-over letting a queue pass a shuttle.
struct CourtesyConfig {
  bool enabled = false;
  int min_queue = 4;        // vehicles queued behind within queue_range_m
  double queue_range_m = 60.0;
  double duration_s = 20.0;
};

struct SimConfig {
  double step_s = 0.1;
  double duration_s = 3600.0;  // measured window length
  double warmup_s = 600.0;     // simulated before the measured window
  std::uint64_t seed = 1;
  double sample_interval_s = 1.0;
  double lookahead_m = 300.0;
  bool record_trajectories = true;
  CourtesyConfig courtesy;

  double horizon_s() const { return warmup_s + duration_s; }
  /// Throws std::invalid_argument.
  void validate() const;
};

/// One transit line operated during a run.
struct ShuttleService {
  std::string route;
  double headway_min = 30.0;
  std::optional<double> speed_cap_mps;  // replaces the class maximum speed
};

/// Departure times 0, H, 2H, ... strictly below the horizon.
std::vector<double> dispatch_shuttles(double headway_min, double horizon_s);

/// A vehicle released at a fixed time along a fixed path (tests, calibration).
struct ScriptedDeparture {
  double time_s = 0.0;
  VehicleClass cls = VehicleClass::kHdv;
  std::vector<Index> path;
  std::optional<DriverDraw> draw;       // sampled from the class parameters when absent
  std::optional<std::string> route;     // serve this transit route's stops
  std::optional<double> entry_speed_mps;
  std::string tag;
};

struct SimInputs {
  VehicleClassParams hdv = VehicleClassParams::hdv();
  VehicleClassParams shuttle = VehicleClassParams::shuttle();
  DemandProfile demand;
  /// Path plan; when absent a free-flow logit plan is derived from the demand.
  std::optional<AssignmentPlan> plan;
  std::vector<ShuttleService> shuttles;
  std::vector<ScriptedDeparture> scripted;
  YieldRule yield;
};

struct TrajectorySample {
  double t_s = 0.0;
  VehicleId vehicle = 0;
  VehicleClass cls = VehicleClass::kHdv;
  Index section = kNoIndex;
  double offset_m = 0.0;
  double speed_mps = 0.0;
  bool excluded = false;
};

struct DetectorCount {
  Index detector = kNoIndex;
  double bin_start_s = 0.0;
  int count = 0;
};

/// Front-bumper passage over one full section.
struct SectionPassage {
  VehicleId vehicle = 0;
  Index section = kNoIndex;
  std::size_t path_pos = 0;
  double entry_s = 0.0;
  double exit_s = 0.0;
  double ideal_s = 0.0;     // length over the vehicle's desired speed on the section
  double excluded_s = 0.0;  // courtesy pull-over time spent on the section
};

struct Traversal {
  VehicleId vehicle = 0;
  VehicleClass cls = VehicleClass::kHdv;
  Index group = kNoIndex;
  double entry_s = 0.0;
  double exit_s = 0.0;
  double distance_m = 0.0;
  double ideal_s = 0.0;
  double excluded_s = 0.0;

  double travel_time_s() const { return exit_s - entry_s - excluded_s; }
};

struct VehicleRecord {
  VehicleId id = 0;
  VehicleClass cls = VehicleClass::kHdv;
  std::string tag;
  std::string origin;
  std::string destination;
  std::string route;
  double release_s = 0.0;
  double entry_s = -1.0;  // -1: never entered
  double exit_s = -1.0;   // -1: still travelling at the horizon
  double distance_m = 0.0;
  double ideal_s = 0.0;
  double excluded_s = 0.0;
  double desired_speed_mps = 0.0;  // on the first section

  bool finished() const { return exit_s >= 0.0; }
  double travel_time_s() const { return exit_s - entry_s - excluded_s; }
  double delay_s() const;
};

struct SimStats {
  std::uint64_t steps = 0;
  std::uint64_t released = 0;
  std::uint64_t entered = 0;
  std::uint64_t exited = 0;
  std::uint64_t in_network = 0;
  std::uint64_t queued = 0;
  std::uint64_t max_queued = 0;
  std::uint64_t guard_activations = 0;   // kinematic guard clipped an advance behind a vehicle
  std::uint64_t speed_violations = 0;    // speed outside [0, desired]
  std::uint64_t accel_violations = 0;    // speed change outside the class limits
  std::uint64_t lane_changes = 0;
  std::uint64_t red_runs = 0;            // could not stop for a red light
  double min_gap_m = 1e9;
};

struct SimOutput {
  double measure_start_s = 0.0;
  double measure_end_s = 0.0;
  std::vector<TrajectorySample> trajectories;
  std::vector<DetectorCount> detector_counts;  // dense: every detector x every bin
  std::vector<SectionPassage> passages;        // sorted by vehicle, then path position
  std::vector<Traversal> traversals;           // over the network's segment groups
  std::vector<VehicleRecord> vehicles;         // sorted by id
  SimStats stats;
};

/// What tests and bindings can observe between steps.
struct VehicleState {
  VehicleId id = 0;
  VehicleClass cls = VehicleClass::kHdv;
  Index section = kNoIndex;
  int lane = 0;
  double offset_m = 0.0;
  double speed_mps = 0.0;
  double desired_mps = 0.0;
  double length_m = 0.0;
  bool dwelling = false;
  bool pulled_over = false;
  std::vector<Index> path;
  std::size_t path_pos = 0;
};

struct Snapshot {
  double t_s = 0.0;
  std::vector<VehicleState> vehicles;  // sorted by id
  std::uint64_t queued = 0;
  SimStats stats;
};

class Simulation {
 public:
  Simulation(const Network& net, SimInputs inputs, SimConfig config);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  /// Advances one step. Throws SimulationError on an invariant breach.
  void step();
  bool finished() const;
  double time() const;
  Snapshot snapshot() const;
  /// Runs to the horizon (if needed) and returns the recorded output.
  SimOutput finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimOutput run(const Network& net, const SimInputs& inputs, const SimConfig& config);

/// One record per vehicle per complete group traversal inside the measured
/// window; partial traversals are dropped.
std::vector<Traversal> extract_traversals(const SimOutput& output, const Network& net,
                                          const std::vector<SegmentGroup>& groups);

}  // namespace shuttlesim
