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

#include "shuttlesim/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shuttlesim {

std::string_view to_string(VehicleClass c) { return c == VehicleClass::kHdv ? "HDV" : "shuttle"; }

VehicleClass vehicle_class_from_string(std::string_view s) {
  if (s == "HDV" || s == "hdv") return VehicleClass::kHdv;
  if (s == "shuttle" || s == "Shuttle" || s == "SHUTTLE") return VehicleClass::kShuttle;
  throw std::invalid_argument("unknown vehicle class: " + std::string(s));
}

bool ParamDist::valid() const {
  return std::isfinite(min) && std::isfinite(max) && min <= mean && mean <= max && deviation >= 0.0;
}

double sample(const ParamDist& d, Rng& rng) {
  if (d.deviation == 0.0 || d.min == d.max) return d.mean;
  std::normal_distribution<double> normal(d.mean, d.deviation);
  // Rejection; the acceptance probability is bounded below because the mean
  // lies inside [min, max].
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double x = normal(rng);
    if (x >= d.min && x <= d.max) return x;
  }
  return d.mean;
}

double truncated_mean(const ParamDist& d) {
  if (d.deviation == 0.0 || d.min == d.max) return d.mean;
  const double a = (d.min - d.mean) / d.deviation;
  const double b = (d.max - d.mean) / d.deviation;
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  return d.mean + d.deviation * (pdf(a) - pdf(b)) / (cdf(b) - cdf(a));
}

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw std::invalid_argument(std::string("invalid vehicle parameter: ") + field);
}

}  // namespace

void VehicleClassParams::validate() const {
  require(length_m > 0.0, "length");
  require(width_m > 0.0, "width");
  require(max_speed_mps > 0.0, "max_speed");
  require(speed_acceptance.valid() && speed_acceptance.min > 0.0, "speed_acceptance");
  require(clearance_m.valid() && clearance_m.min >= 0.0, "clearance");
  require(yield_time_s.valid() && yield_time_s.min >= 0.0, "yield_time");
  require(reaction_normal_s > 0.0, "reaction_normal");
  require(reaction_at_stop_s > 0.0, "reaction_at_stop");
  require(reaction_at_signal_s > 0.0, "reaction_at_signal");
  require(max_accel.valid() && max_accel.min > 0.0, "max_accel");
  require(normal_decel.valid() && normal_decel.min > 0.0, "normal_decel");
  require(max_decel.valid() && max_decel.min > 0.0, "max_decel");
  require(sensitivity.valid() && sensitivity.min > 0.0, "sensitivity");
  require(min_time_gap_s >= 0.0, "min_time_gap");
}

VehicleClassParams VehicleClassParams::hdv() {
  VehicleClassParams p;
  p.cls = VehicleClass::kHdv;
  p.length_m = 4.5;
  p.width_m = 1.8;
  p.max_speed_mps = units::kInfinity;
  p.speed_acceptance = {0.9, 1.0, 0.25, 1.2};
  p.clearance_m = {0.5, 2.0, 0.5, 3.5};
  p.yield_time_s = {5.0, 10.0, 2.5, 15.0};
  p.reaction_normal_s = 0.8;
  p.reaction_at_stop_s = 1.3;
  p.reaction_at_signal_s = 1.7;
  p.max_accel = {2.0, 5.0, 0.5, 6.0};
  p.normal_decel = {2.5, 3.0, 0.5, 3.5};
  p.max_decel = {4.0, 5.0, 0.5, 6.0};
  p.sensitivity = ParamDist::fixed(1.0);
  p.min_time_gap_s = 0.0;
  return p;
}

VehicleClassParams VehicleClassParams::shuttle() {
  VehicleClassParams p;
  p.cls = VehicleClass::kShuttle;
  p.length_m = 4.75;
  p.width_m = 2.11;
  p.max_speed_mps = units::mph(9.5);
  p.speed_acceptance = ParamDist::fixed(1.0);
  p.clearance_m = ParamDist::fixed(1.0);
  p.yield_time_s = ParamDist::fixed(6.0);
  p.reaction_normal_s = 0.1;
  p.reaction_at_stop_s = 0.1;
  p.reaction_at_signal_s = 0.1;
  p.max_accel = ParamDist::fixed(3.0);
  p.normal_decel = ParamDist::fixed(2.0);
  p.max_decel = ParamDist::fixed(6.0);
  p.sensitivity = {0.3, 0.7, 0.3, 0.9};
  p.min_time_gap_s = 2.0;
  return p;
}

DriverDraw sample_driver(const VehicleClassParams& p, Rng& rng) {
  DriverDraw d;
  d.cls = p.cls;
  d.length_m = p.length_m;
  d.width_m = p.width_m;
  d.max_speed_mps = p.max_speed_mps;
  // Fixed draw order keeps realisations comparable across parameter sets.
  d.speed_acceptance = sample(p.speed_acceptance, rng);
  d.clearance_m = sample(p.clearance_m, rng);
  d.yield_time_s = sample(p.yield_time_s, rng);
  d.max_accel = sample(p.max_accel, rng);
  d.normal_decel = sample(p.normal_decel, rng);
  d.max_decel = sample(p.max_decel, rng);
  d.sensitivity = sample(p.sensitivity, rng);
  d.reaction_normal_s = p.reaction_normal_s;
  d.reaction_at_stop_s = p.reaction_at_stop_s;
  d.reaction_at_signal_s = p.reaction_at_signal_s;
  d.min_time_gap_s = p.min_time_gap_s;
  d.stay_in_overtaking_lane = p.stay_in_overtaking_lane;
  d.imprudent_lane_change = p.imprudent_lane_change;
  return d;
}

double desired_speed(const DriverDraw& draw, double section_limit_mps) {
  return std::min(draw.max_speed_mps, draw.speed_acceptance * section_limit_mps);
}

double gipps_accel_component(double v, double desired, double max_accel, double tau) {
  const double ratio = v / desired;
  return v + 2.5 * max_accel * tau * (1.0 - ratio) * std::sqrt(std::max(0.0, 0.025 + ratio));
}

double gipps_brake_component(double v, double v_leader, double space_gap, double decel, double leader_decel,
                             double tau, double extra_time_gap) {
  const double horizon = tau / 2.0 + extra_time_gap / 2.0;
  const double radicand =
      decel * decel * horizon * horizon + decel * (2.0 * space_gap - v * tau + v_leader * v_leader / leader_decel);
  if (radicand < 0.0) return 0.0;
  return std::max(0.0, -decel * horizon + std::sqrt(radicand));
}

double brake_speed(double v, const LeaderView& leader, const DriverDraw& draw, double tau) {
  if (leader.is_virtual)
    return gipps_brake_component(v, 0.0, leader.bumper_gap_m, draw.normal_decel, draw.normal_decel, tau, 0.0);
  return gipps_brake_component(v, leader.speed_mps, leader.bumper_gap_m - draw.clearance_m, draw.max_decel,
                               draw.sensitivity * leader.max_decel, tau, draw.min_time_gap_s);
}

double car_following_speed_capped(double v, double brake_bound, const DriverDraw& draw, double desired, double tau,
                                  double step) {
  double next = v;
  if (desired > 0.0) {
    const double free_target = gipps_accel_component(v, desired, draw.max_accel, tau);
    next = v + (free_target - v) * std::min(1.0, step / tau);
  }
  next = std::min(next, brake_bound);
  next = std::clamp(next, 0.0, std::max(0.0, desired));
  next = std::clamp(next, std::max(0.0, v - draw.max_decel * step), v + draw.max_accel * step);
  return next;
}

double car_following_speed(double v, const std::optional<LeaderView>& leader, const DriverDraw& draw,
                           double section_limit_mps, double tau, double step) {
  const double desired = desired_speed(draw, section_limit_mps);
  const double brake = leader ? brake_speed(v, *leader, draw, tau) : units::kInfinity;
  return car_following_speed_capped(v, brake, draw, desired, tau, step);
}

double achievable_lane_speed(double desired, const std::optional<LaneNeighbor>& leader, double lookahead_m) {
  if (leader && leader->bumper_gap_m <= lookahead_m) return std::min(desired, leader->speed_mps);
  return desired;
}

bool lane_change_feasible(const LaneChangeInputs& in, const DriverDraw& draw) {
  const double accept_decel = draw.imprudent_lane_change ? draw.max_decel : draw.normal_decel;
  if (in.target_leader) {
    const auto& l = *in.target_leader;
    if (l.bumper_gap_m <= 0.0) return false;
    const double leader_decel = l.draw ? l.draw->max_decel : draw.max_decel;
    const double b = gipps_brake_component(in.speed, l.speed_mps, l.bumper_gap_m - draw.clearance_m, accept_decel,
                                           draw.sensitivity * leader_decel, in.tau, draw.min_time_gap_s);
    if (b < in.speed - accept_decel * in.step) return false;
  }
  if (in.target_follower) {
    const auto& f = *in.target_follower;
    if (f.bumper_gap_m <= 0.0) return false;
    if (f.draw != nullptr) {
      const DriverDraw& fd = *f.draw;
      const double f_accept = fd.imprudent_lane_change ? fd.max_decel : fd.normal_decel;
      const double b = gipps_brake_component(f.speed_mps, in.speed, f.bumper_gap_m - fd.clearance_m, f_accept,
                                             fd.sensitivity * draw.max_decel, f.tau, fd.min_time_gap_s);
      if (b < f.speed_mps - f_accept * in.step) return false;
    }
  }
  return true;
}

LaneDecision lane_change_decision(const LaneChangeInputs& in, const DriverDraw& draw) {
  if (!in.target_lane_exists) return LaneDecision::kKeep;
  bool motivated = false;
  const double current = achievable_lane_speed(in.desired, in.current_leader, in.lookahead_m);
  const double target = achievable_lane_speed(in.desired, in.target_leader, in.lookahead_m);
  switch (in.motivation) {
    case LaneChangeMotivation::kTurnFeasibility:
      motivated = in.turn_lane_required;
      break;
    case LaneChangeMotivation::kSpeedGain:
      motivated = current < 0.9 * target;
      break;
    case LaneChangeMotivation::kReturnToSlowLane:
      motivated = !draw.stay_in_overtaking_lane && target >= 0.9 * current;
      break;
  }
  if (!motivated) return LaneDecision::kKeep;
  return lane_change_feasible(in, draw) ? LaneDecision::kChange : LaneDecision::kKeep;
}

double required_gap(double waiting_s, double yield_time_s, const YieldRule& rule) {
  if (yield_time_s <= 0.0 || waiting_s >= yield_time_s) return rule.minimum_gap_s;
  const double frac = std::max(0.0, waiting_s) / yield_time_s;
  return rule.initial_gap_s + (rule.minimum_gap_s - rule.initial_gap_s) * frac;
}

YieldDecision yield_gap_accept(double waiting_s, const DriverDraw& draw, double conflicting_gap_s,
                               const YieldRule& rule) {
  return conflicting_gap_s >= required_gap(waiting_s, draw.yield_time_s, rule) ? YieldDecision::kAccept
                                                                               : YieldDecision::kWait;
}

}  // namespace shuttlesim
