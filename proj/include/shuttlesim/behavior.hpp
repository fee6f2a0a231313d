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

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "shuttlesim/rng.hpp"
#include "shuttlesim/units.hpp"

namespace shuttlesim {

enum class VehicleClass { kHdv, kShuttle };
std::string_view to_string(VehicleClass c);
VehicleClass vehicle_class_from_string(std::string_view s);

/// A truncated normal distribution: Normal(mean, deviation) restricted to
/// [min, max]. A zero deviation always yields `mean`.
struct ParamDist {
  double min = 0.0;
  double mean = 0.0;
  double deviation = 0.0;
  double max = 0.0;

  static ParamDist fixed(double v) { return {v, v, 0.0, v}; }
  bool valid() const;
  bool operator==(const ParamDist&) const = default;
};

/// Draws from `d` by rejection. Deterministic for a given generator state.
double sample(const ParamDist& d, Rng& rng);

/// Mean of the truncated distribution (closed form).
double truncated_mean(const ParamDist& d);

/// Parameters of one vehicle class. Distributed fields are realised per
/// driver by sample_driver.
struct VehicleClassParams {
  VehicleClass cls = VehicleClass::kHdv;
  double length_m = 4.5;
  double width_m = 1.8;
  double max_speed_mps = units::kInfinity;  // HDVs: bounded by the road limit only
  ParamDist speed_acceptance = ParamDist::fixed(1.0);
  ParamDist clearance_m = ParamDist::fixed(1.0);
  ParamDist yield_time_s = ParamDist::fixed(10.0);
  double reaction_normal_s = 0.8;
  double reaction_at_stop_s = 1.3;
  double reaction_at_signal_s = 1.7;
  ParamDist max_accel = ParamDist::fixed(3.0);
  ParamDist normal_decel = ParamDist::fixed(3.0);
  ParamDist max_decel = ParamDist::fixed(5.0);
  ParamDist sensitivity = ParamDist::fixed(1.0);
  double min_time_gap_s = 0.0;
  bool stay_in_overtaking_lane = false;
  bool imprudent_lane_change = false;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  bool operator==(const VehicleClassParams&) const = default;

  /// Calibrated human-driven sedan.
  static VehicleClassParams hdv();
  /// Calibrated low-speed autonomous shuttle (9.5 mph cap).
  static VehicleClassParams shuttle();
};

/// One sampled driver/vehicle.
struct DriverDraw {
  VehicleClass cls = VehicleClass::kHdv;
  double length_m = 4.5;
  double width_m = 1.8;
  double max_speed_mps = units::kInfinity;
  double speed_acceptance = 1.0;
  double clearance_m = 1.0;
  double yield_time_s = 10.0;
  double reaction_normal_s = 0.8;
  double reaction_at_stop_s = 1.3;
  double reaction_at_signal_s = 1.7;
  double max_accel = 3.0;
  double normal_decel = 3.0;
  double max_decel = 5.0;
  double sensitivity = 1.0;
  double min_time_gap_s = 0.0;
  bool stay_in_overtaking_lane = false;
  bool imprudent_lane_change = false;
};

DriverDraw sample_driver(const VehicleClassParams& params, Rng& rng);

/// min(max speed, speed acceptance x section limit).
double desired_speed(const DriverDraw& draw, double section_limit_mps);

/// Gipps free-driving bound: speed reachable after `tau` seconds.
double gipps_accel_component(double v, double desired, double max_accel, double tau);

/// Gipps collision-avoidance bound. `space_gap` is bumper-to-bumper distance
/// minus the follower's clearance; `decel` is the follower's braking
/// magnitude and `leader_decel` its estimate of the leader's. A negative
/// radicand or result clamps to 0.
double gipps_brake_component(double v, double v_leader, double space_gap, double decel, double leader_decel,
                             double tau, double extra_time_gap);

/// What a follower sees ahead of it.
struct LeaderView {
  double bumper_gap_m = 0.0;  // leader rear bumper - follower front bumper
  double speed_mps = 0.0;
  double max_decel = 5.0;  // leader's braking capability
  bool is_virtual = false;  // stop line, red signal or transit stop
};

/// Brake bound against one leader, using the driver's parameters: clearance
/// and the extra time gap apply to real vehicles only, and virtual leaders
/// are approached at normal deceleration.
double brake_speed(double v, const LeaderView& leader, const DriverDraw& draw, double tau);

/// Next-step speed. The free term is the Gipps speed after `tau`, reached
/// linearly over `step`; the result is min(free, brake), clamped to
/// [0, desired] and to the per-step acceleration limits.
double car_following_speed(double v, const std::optional<LeaderView>& leader, const DriverDraw& draw,
                           double section_limit_mps, double tau, double step);

/// Same, with an explicit desired speed (already capped by the caller) and a
/// precomputed brake bound.
double car_following_speed_capped(double v, double brake_bound, const DriverDraw& draw, double desired, double tau,
                                  double step);

enum class LaneChangeMotivation { kTurnFeasibility, kSpeedGain, kReturnToSlowLane };
enum class LaneDecision { kKeep, kChange };

struct LaneNeighbor {
  double bumper_gap_m = 0.0;  // >= 0 when not overlapping
  double speed_mps = 0.0;
  const DriverDraw* draw = nullptr;
  double tau = 0.8;  // follower's current reaction time (target follower only)
};

struct LaneChangeInputs {
  double speed = 0.0;
  double desired = 0.0;
  double tau = 0.8;
  double step = 0.1;
  bool target_lane_exists = false;
  LaneChangeMotivation motivation = LaneChangeMotivation::kSpeedGain;
  bool turn_lane_required = false;  // kTurnFeasibility: next turn needs the target lane within lookahead
  std::optional<LaneNeighbor> current_leader;
  std::optional<LaneNeighbor> target_leader;
  std::optional<LaneNeighbor> target_follower;
  double lookahead_m = 200.0;
};

/// Gap-acceptance plus motivation test for one candidate lane change.
LaneDecision lane_change_decision(const LaneChangeInputs& in, const DriverDraw& draw);

/// Lane speed a driver expects: min(desired, leader speed) when a leader is
/// within the lookahead.
double achievable_lane_speed(double desired, const std::optional<LaneNeighbor>& leader, double lookahead_m);

/// Whether the subject may move in between target leader and follower.
bool lane_change_feasible(const LaneChangeInputs& in, const DriverDraw& draw);

/// Required critical gaps for yield/stop crossings.
struct YieldRule {
  double initial_gap_s = 6.0;  // g0, at zero waiting time
  double minimum_gap_s = 3.0;  // g_min, from yield_time onwards
};

enum class YieldDecision { kAccept, kWait };

double required_gap(double waiting_s, double yield_time_s, const YieldRule& rule);
YieldDecision yield_gap_accept(double waiting_s, const DriverDraw& draw, double conflicting_gap_s,
                               const YieldRule& rule = {});

}  // namespace shuttlesim
