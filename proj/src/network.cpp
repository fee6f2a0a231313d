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

#include "shuttlesim/network.hpp"

#include <algorithm>
#include <cmath>

#include "shuttlesim/units.hpp"

namespace shuttlesim {

std::string_view to_string(TurnControl c) {
  switch (c) {
    case TurnControl::kUncontrolled: return "uncontrolled";
    case TurnControl::kStop: return "stop";
    case TurnControl::kYield: return "yield";
    case TurnControl::kSignal: return "signal";
  }
  return "uncontrolled";
}

std::string_view to_string(CentroidKind k) {
  return k == CentroidKind::kInternal ? "internal" : "external";
}

std::string_view to_string(ConnectorDirection d) {
  return d == ConnectorDirection::kIn ? "in" : "out";
}

std::vector<Index> Centroid::origin_sections() const {
  std::vector<Index> out;
  for (const auto& c : connectors)
    if (c.direction == ConnectorDirection::kOut) out.push_back(c.section);
  return out;
}

std::vector<Index> Centroid::destination_sections() const {
  std::vector<Index> out;
  for (const auto& c : connectors)
    if (c.direction == ConnectorDirection::kIn) out.push_back(c.section);
  return out;
}

double TransitRoute::length_miles() const { return units::to_miles(length_m); }

namespace {

template <class Map>
void register_id(Map& map, const std::string& id, Index idx, const char* what) {
  if (id.empty()) throw NetworkError(std::string("empty ") + what + " id", "");
  if (!map.emplace(id, idx).second)
    throw NetworkError(std::string("duplicate ") + what + " id", id);
}

template <class Map>
Index resolve(const Map& map, const std::string& id, const char* what) {
  auto it = map.find(id);
  if (it == map.end()) throw NetworkError(std::string("dangling ") + what + " reference", id);
  return it->second;
}

std::optional<Index> lookup(const std::unordered_map<std::string, Index>& map, std::string_view id) {
  auto it = map.find(std::string(id));
  if (it == map.end()) return std::nullopt;
  return it->second;
}

}  // namespace

Network Network::build(const NetworkData& data) {
  Network net;

  for (const auto& n : data.nodes) {
    register_id(net.node_ids_, n.id, static_cast<Index>(net.nodes_.size()), "node");
    net.nodes_.push_back(n.id);
  }

  for (const auto& s : data.sections) {
    register_id(net.section_ids_, s.id, static_cast<Index>(net.sections_.size()), "section");
    if (!(s.length_m > 0.0)) throw NetworkError("section length must be > 0", s.id);
    if (s.lane_count < 1) throw NetworkError("section lane_count must be >= 1", s.id);
    if (!(s.speed_limit_mps > 0.0)) throw NetworkError("section speed_limit must be > 0", s.id);
    Section sec;
    sec.id = s.id;
    sec.from_node = resolve(net.node_ids_, s.from_node, "node");
    sec.to_node = resolve(net.node_ids_, s.to_node, "node");
    sec.length_m = s.length_m;
    sec.lane_count = s.lane_count;
    sec.speed_limit_mps = s.speed_limit_mps;
    net.sections_.push_back(std::move(sec));
  }
  net.out_turns_.assign(net.sections_.size(), {});
  net.in_turns_.assign(net.sections_.size(), {});
  net.section_detectors_.assign(net.sections_.size(), {});

  std::unordered_map<Index, Index> plan_by_node;
  for (const auto& sp : data.signals) {
    const Index node = resolve(net.node_ids_, sp.node, "node");
    if (!plan_by_node.emplace(node, static_cast<Index>(net.signals_.size())).second)
      throw NetworkError("more than one signal plan at node", sp.node);
    if (!(sp.cycle_s > 0.0)) throw NetworkError("signal cycle must be > 0", sp.node);
    SignalPlan plan;
    plan.node = node;
    plan.cycle_s = sp.cycle_s;
    plan.offset_s = sp.offset_s;
    for (const auto& ph : sp.phases) {
      if (!(ph.green_start_s >= 0.0 && ph.green_start_s < ph.green_end_s && ph.green_end_s <= sp.cycle_s))
        throw NetworkError("signal phase interval outside [0, cycle)", sp.node + "/" + ph.id);
      for (const auto& other : plan.phases)
        if (other.id == ph.id) throw NetworkError("duplicate signal phase id", sp.node + "/" + ph.id);
      plan.phases.push_back({ph.id, ph.green_start_s, ph.green_end_s});
    }
    net.signals_.push_back(std::move(plan));
  }

  for (const auto& t : data.turns) {
    const std::string label = t.from_section + "->" + t.to_section;
    Turn turn;
    turn.from_section = resolve(net.section_ids_, t.from_section, "section");
    turn.to_section = resolve(net.section_ids_, t.to_section, "section");
    const auto& from = net.sections_[turn.from_section];
    const auto& to = net.sections_[turn.to_section];
    if (from.to_node != to.from_node) throw NetworkError("turn sections do not share a node", label);
    if (t.from_lane >= from.lane_count || t.to_lane >= to.lane_count)
      throw NetworkError("turn lane out of range", label);
    if (net.turn_between(turn.from_section, turn.to_section) != nullptr)
      throw NetworkError("duplicate turn", label);
    turn.from_lane = t.from_lane;
    turn.to_lane = t.to_lane;
    turn.control = t.control;
    if (t.control == TurnControl::kSignal) {
      auto it = plan_by_node.find(from.to_node);
      if (it == plan_by_node.end()) throw NetworkError("signalized turn at node without signal plan", label);
      turn.signal = it->second;
      const auto& phases = net.signals_[it->second].phases;
      auto ph = std::find_if(phases.begin(), phases.end(), [&](const SignalPhase& p) { return p.id == t.phase; });
      if (ph == phases.end()) throw NetworkError("signalized turn references unknown phase", label + "/" + t.phase);
      turn.phase = static_cast<Index>(ph - phases.begin());
    }
    const auto idx = static_cast<Index>(net.turns_.size());
    net.out_turns_[turn.from_section].push_back(idx);
    net.in_turns_[turn.to_section].push_back(idx);
    net.turns_.push_back(turn);
  }

  for (const auto& d : data.detectors) {
    register_id(net.detector_ids_, d.id, static_cast<Index>(net.detectors_.size()), "detector");
    Detector det;
    det.id = d.id;
    det.section = resolve(net.section_ids_, d.section, "section");
    if (d.offset_m < 0.0 || d.offset_m > net.sections_[det.section].length_m)
      throw NetworkError("detector offset outside its section", d.id);
    if (!(d.aggregation_s > 0.0)) throw NetworkError("detector aggregation must be > 0", d.id);
    det.offset_m = d.offset_m;
    det.aggregation_s = d.aggregation_s;
    net.section_detectors_[det.section].push_back(static_cast<Index>(net.detectors_.size()));
    net.detectors_.push_back(std::move(det));
  }
  for (auto& list : net.section_detectors_)
    std::stable_sort(list.begin(), list.end(),
                     [&](Index a, Index b) { return net.detectors_[a].offset_m < net.detectors_[b].offset_m; });

  for (const auto& c : data.centroids) {
    register_id(net.centroid_ids_, c.id, static_cast<Index>(net.centroids_.size()), "centroid");
    Centroid cen;
    cen.id = c.id;
    cen.kind = c.kind;
    for (const auto& conn : c.connectors)
      cen.connectors.push_back({resolve(net.section_ids_, conn.section, "section"), conn.direction});
    net.centroids_.push_back(std::move(cen));
  }

  auto check_connected = [&](const std::vector<Index>& secs, const std::string& owner, const char* what) {
    for (std::size_t i = 1; i < secs.size(); ++i)
      if (net.turn_between(secs[i - 1], secs[i]) == nullptr)
        throw NetworkError(std::string(what) + " not connected", owner + ": " + net.sections_[secs[i - 1]].id +
                                                                     "->" + net.sections_[secs[i]].id);
  };

  for (const auto& r : data.transit_routes) {
    register_id(net.route_ids_, r.id, static_cast<Index>(net.routes_.size()), "transit route");
    if (r.sections.empty()) throw NetworkError("transit route has no sections", r.id);
    TransitRoute route;
    route.id = r.id;
    for (const auto& s : r.sections) route.sections.push_back(resolve(net.section_ids_, s, "section"));
    check_connected(route.sections, r.id, "route");
    route.length_m = path_length(net, route.sections);
    // Stops must follow route order; a stop is matched to the first route
    // position at or after the previous stop.
    std::size_t cursor = 0;
    double last_offset = -1.0;
    for (const auto& st : r.stops) {
      const Index sec = resolve(net.section_ids_, st.section, "section");
      std::size_t pos = cursor;
      while (pos < route.sections.size() && route.sections[pos] != sec) {
        ++pos;
        last_offset = -1.0;
      }
      if (pos == route.sections.size()) throw NetworkError("stop does not lie on its route", r.id + "/" + st.section);
      if (st.offset_m < 0.0 || st.offset_m > net.sections_[sec].length_m || st.offset_m < last_offset)
        throw NetworkError("stop offset outside its section or out of order", r.id + "/" + st.section);
      if (st.dwell_s < 0.0) throw NetworkError("negative dwell", r.id + "/" + st.section);
      cursor = pos;
      last_offset = st.offset_m;
      route.stops.push_back({sec, st.offset_m, st.dwell_s});
    }
    net.routes_.push_back(std::move(route));
  }

  for (const auto& g : data.segment_groups) {
    register_id(net.group_ids_, g.name, static_cast<Index>(net.groups_.size()), "segment group");
    SegmentGroup group;
    group.name = g.name;
    for (const auto& s : g.sections) group.sections.push_back(resolve(net.section_ids_, s, "section"));
    check_connected(group.sections, g.name, "segment group");
    net.groups_.push_back(std::move(group));
  }
  return net;
}

std::optional<Index> Network::find_node(std::string_view id) const { return lookup(node_ids_, id); }
std::optional<Index> Network::find_section(std::string_view id) const { return lookup(section_ids_, id); }
std::optional<Index> Network::find_centroid(std::string_view id) const { return lookup(centroid_ids_, id); }
std::optional<Index> Network::find_route(std::string_view id) const { return lookup(route_ids_, id); }
std::optional<Index> Network::find_group(std::string_view name) const { return lookup(group_ids_, name); }
std::optional<Index> Network::find_detector(std::string_view id) const { return lookup(detector_ids_, id); }

Index Network::section_index(std::string_view id) const {
  auto idx = find_section(id);
  if (!idx) throw NetworkError("unknown section", std::string(id));
  return *idx;
}

const Turn* Network::turn_between(Index from, Index to) const {
  if (from >= out_turns_.size()) return nullptr;
  for (Index t : out_turns_[from])
    if (turns_[t].to_section == to) return &turns_[t];
  return nullptr;
}

NetworkData Network::to_data() const {
  NetworkData d;
  for (const auto& n : nodes_) d.nodes.push_back({n});
  for (const auto& s : sections_)
    d.sections.push_back({s.id, nodes_[s.from_node], nodes_[s.to_node], s.length_m, s.lane_count, s.speed_limit_mps});
  for (const auto& t : turns_) {
    TurnSpec ts{sections_[t.from_section].id, sections_[t.to_section].id, t.from_lane, t.to_lane, t.control, ""};
    if (t.control == TurnControl::kSignal) ts.phase = signals_[t.signal].phases[t.phase].id;
    d.turns.push_back(std::move(ts));
  }
  for (const auto& p : signals_) {
    SignalPlanSpec sp{nodes_[p.node], p.cycle_s, p.offset_s, {}};
    for (const auto& ph : p.phases) sp.phases.push_back({ph.id, ph.green_start_s, ph.green_end_s});
    d.signals.push_back(std::move(sp));
  }
  for (const auto& det : detectors_)
    d.detectors.push_back({det.id, sections_[det.section].id, det.offset_m, det.aggregation_s});
  for (const auto& c : centroids_) {
    CentroidSpec cs{c.id, c.kind, {}};
    for (const auto& conn : c.connectors) cs.connectors.push_back({sections_[conn.section].id, conn.direction});
    d.centroids.push_back(std::move(cs));
  }
  for (const auto& r : routes_) {
    TransitRouteSpec rs{r.id, {}, {}};
    for (Index s : r.sections) rs.sections.push_back(sections_[s].id);
    for (const auto& st : r.stops) rs.stops.push_back({sections_[st.section].id, st.offset_m, st.dwell_s});
    d.transit_routes.push_back(std::move(rs));
  }
  for (const auto& g : groups_) {
    SegmentGroupSpec gs{g.name, {}};
    for (Index s : g.sections) gs.sections.push_back(sections_[s].id);
    d.segment_groups.push_back(std::move(gs));
  }
  return d;
}

namespace {

double cycle_local(const SignalPlan& plan, double t) {
  double local = std::fmod(t - plan.offset_s, plan.cycle_s);
  if (local < 0.0) local += plan.cycle_s;
  return local;
}

}  // namespace

std::vector<bool> signal_state(const SignalPlan& plan, double t) {
  const double local = cycle_local(plan, t);
  std::vector<bool> state;
  state.reserve(plan.phases.size());
  for (const auto& ph : plan.phases) state.push_back(local >= ph.green_start_s && local < ph.green_end_s);
  return state;
}

bool phase_green(const SignalPlan& plan, Index phase, double t) {
  const auto& ph = plan.phases.at(phase);
  const double local = cycle_local(plan, t);
  return local >= ph.green_start_s && local < ph.green_end_s;
}

double green_ratio(const SignalPlan& plan, Index phase) {
  const auto& ph = plan.phases.at(phase);
  return (ph.green_end_s - ph.green_start_s) / plan.cycle_s;
}

double path_ideal_time(const Network& net, const std::vector<Index>& sections,
                       const std::function<double(double)>& desired_speed) {
  double total = 0.0;
  for (Index s : sections) {
    const auto& sec = net.section(s);
    total += sec.length_m / desired_speed(sec.speed_limit_mps);
  }
  return total;
}

double path_ideal_time(const Network& net, const SegmentGroup& group,
                       const std::function<double(double)>& desired_speed) {
  return path_ideal_time(net, group.sections, desired_speed);
}

double path_ideal_time(const Network& net, const SegmentGroup& group, double max_speed_mps) {
  return path_ideal_time(net, group, [max_speed_mps](double limit) { return std::min(limit, max_speed_mps); });
}

double path_length(const Network& net, const std::vector<Index>& sections) {
  double total = 0.0;
  for (Index s : sections) total += net.section(s).length_m;
  return total;
}

}  // namespace shuttlesim
