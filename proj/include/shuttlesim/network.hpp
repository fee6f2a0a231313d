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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shuttlesim {

using Index = std::uint32_t;
inline constexpr Index kNoIndex = static_cast<Index>(-1);

/// Raised for any structural problem in a network description. `offending_id`
/// names the element that failed validation.
class NetworkError : public std::runtime_error {
 public:
  NetworkError(const std::string& message, std::string offending_id)
      : std::runtime_error(message + " [" + offending_id + "]"),
        offending_id_(std::move(offending_id)) {}
  const std::string& offending_id() const noexcept { return offending_id_; }

 private:
  std::string offending_id_;
};

enum class TurnControl { kUncontrolled, kStop, kYield, kSignal };
enum class CentroidKind { kInternal, kExternal };
/// kOut: trips leave the centroid onto the section (origin side).
/// kIn: trips leave the network from the section into the centroid.
enum class ConnectorDirection { kIn, kOut };

std::string_view to_string(TurnControl c);
std::string_view to_string(CentroidKind k);
std::string_view to_string(ConnectorDirection d);

// ---------------------------------------------------------------------------
// Description types. References are by string id; Network::build resolves and
// validates them. All quantities are SI.

struct NodeSpec {
  std::string id;
};

struct SectionSpec {
  std::string id;
  std::string from_node;
  std::string to_node;
  double length_m = 0.0;
  int lane_count = 1;
  double speed_limit_mps = 0.0;
};

struct TurnSpec {
  std::string from_section;
  std::string to_section;
  int from_lane = -1;  // -1: any lane
  int to_lane = -1;    // -1: keep lane index where possible
  TurnControl control = TurnControl::kUncontrolled;
  std::string phase;  // signal phase id at the shared node (kSignal only)
};

struct PhaseSpec {
  std::string id;
  double green_start_s = 0.0;
  double green_end_s = 0.0;
};

struct SignalPlanSpec {
  std::string node;
  double cycle_s = 0.0;
  double offset_s = 0.0;
  std::vector<PhaseSpec> phases;
};

struct DetectorSpec {
  std::string id;
  std::string section;
  double offset_m = 0.0;
  double aggregation_s = 300.0;
};

struct ConnectorSpec {
  std::string section;
  ConnectorDirection direction = ConnectorDirection::kOut;
};

struct CentroidSpec {
  std::string id;
  CentroidKind kind = CentroidKind::kInternal;
  std::vector<ConnectorSpec> connectors;
};

struct StopSpec {
  std::string section;
  double offset_m = 0.0;
  double dwell_s = 20.0;
};

struct TransitRouteSpec {
  std::string id;
  std::vector<std::string> sections;
  std::vector<StopSpec> stops;
};

struct SegmentGroupSpec {
  std::string name;
  std::vector<std::string> sections;
};

struct NetworkData {
  std::vector<NodeSpec> nodes;
  std::vector<SectionSpec> sections;
  std::vector<TurnSpec> turns;
  std::vector<SignalPlanSpec> signals;
  std::vector<DetectorSpec> detectors;
  std::vector<CentroidSpec> centroids;
  std::vector<TransitRouteSpec> transit_routes;
  std::vector<SegmentGroupSpec> segment_groups;
};

// ---------------------------------------------------------------------------
// Resolved types.

struct Section {
  std::string id;
  Index from_node = kNoIndex;
  Index to_node = kNoIndex;
  double length_m = 0.0;
  int lane_count = 1;
  double speed_limit_mps = 0.0;
};

struct Turn {
  Index from_section = kNoIndex;
  Index to_section = kNoIndex;
  int from_lane = -1;
  int to_lane = -1;
  TurnControl control = TurnControl::kUncontrolled;
  Index signal = kNoIndex;  // index into Network::signals()
  Index phase = kNoIndex;   // index into that plan's phases
};

struct SignalPhase {
  std::string id;
  double green_start_s = 0.0;
  double green_end_s = 0.0;
};

struct SignalPlan {
  Index node = kNoIndex;
  double cycle_s = 0.0;
  double offset_s = 0.0;
  std::vector<SignalPhase> phases;
};

struct Detector {
  std::string id;
  Index section = kNoIndex;
  double offset_m = 0.0;
  double aggregation_s = 300.0;
};

struct Connector {
  Index section = kNoIndex;
  ConnectorDirection direction = ConnectorDirection::kOut;
};

struct Centroid {
  std::string id;
  CentroidKind kind = CentroidKind::kInternal;
  std::vector<Connector> connectors;

  std::vector<Index> origin_sections() const;
  std::vector<Index> destination_sections() const;
};

struct TransitStop {
  Index section = kNoIndex;
  double offset_m = 0.0;
  double dwell_s = 20.0;
};

struct TransitRoute {
  std::string id;
  std::vector<Index> sections;
  std::vector<TransitStop> stops;
  double length_m = 0.0;

  double length_miles() const;
};

struct SegmentGroup {
  std::string name;
  std::vector<Index> sections;
};

/// Immutable, validated road network. Safe to share read-only between
/// concurrently running simulations.
class Network {
 public:
  /// Validates `data` and resolves all references. Throws NetworkError.
  static Network build(const NetworkData& data);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Section>& sections() const { return sections_; }
  const std::vector<Turn>& turns() const { return turns_; }
  const std::vector<SignalPlan>& signals() const { return signals_; }
  const std::vector<Detector>& detectors() const { return detectors_; }
  const std::vector<Centroid>& centroids() const { return centroids_; }
  const std::vector<TransitRoute>& transit_routes() const { return routes_; }
  const std::vector<SegmentGroup>& segment_groups() const { return groups_; }

  const Section& section(Index i) const { return sections_.at(i); }

  std::optional<Index> find_node(std::string_view id) const;
  std::optional<Index> find_section(std::string_view id) const;
  std::optional<Index> find_centroid(std::string_view id) const;
  std::optional<Index> find_route(std::string_view id) const;
  std::optional<Index> find_group(std::string_view name) const;
  std::optional<Index> find_detector(std::string_view id) const;
  Index section_index(std::string_view id) const;  // throws if absent

  /// Turns leaving / entering a section, in declaration order.
  const std::vector<Index>& outgoing_turns(Index section) const { return out_turns_.at(section); }
  const std::vector<Index>& incoming_turns(Index section) const { return in_turns_.at(section); }
  /// The turn from `from` to `to`, if any.
  const Turn* turn_between(Index from, Index to) const;
  /// Detectors located on a section, sorted by offset.
  const std::vector<Index>& detectors_on(Index section) const { return section_detectors_.at(section); }

  /// Round-trip back to the string-referenced description.
  NetworkData to_data() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Section> sections_;
  std::vector<Turn> turns_;
  std::vector<SignalPlan> signals_;
  std::vector<Detector> detectors_;
  std::vector<Centroid> centroids_;
  std::vector<TransitRoute> routes_;
  std::vector<SegmentGroup> groups_;

  std::unordered_map<std::string, Index> node_ids_, section_ids_, centroid_ids_, route_ids_,
      group_ids_, detector_ids_;
  std::vector<std::vector<Index>> out_turns_, in_turns_, section_detectors_;
};

/// Per-phase green flags of a fixed-time plan at simulation time t (seconds).
/// Green intervals are half-open [start, end) in cycle-local time
/// (t - offset) mod cycle.
std::vector<bool> signal_state(const SignalPlan& plan, double t);
bool phase_green(const SignalPlan& plan, Index phase, double t);
/// Fraction of the cycle a phase is green.
double green_ratio(const SignalPlan& plan, Index phase);

/// Sum over the group's sections of length / desired speed on that section,
/// where `desired_speed` maps a section speed limit (m/s) to the vehicle's
/// speed there.
double path_ideal_time(const Network& net, const SegmentGroup& group,
                       const std::function<double(double)>& desired_speed);
double path_ideal_time(const Network& net, std::vector<Index> const& sections,
                       const std::function<double(double)>& desired_speed);
/// Convenience form: desired speed = min(limit, max_speed_mps).
double path_ideal_time(const Network& net, const SegmentGroup& group, double max_speed_mps);

double path_length(const Network& net, const std::vector<Index>& sections);

}  // namespace shuttlesim
