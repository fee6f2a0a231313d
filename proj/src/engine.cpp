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

#include "shuttlesim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <utility>

namespace shuttlesim {

void SimConfig::validate() const {
  if (!(step_s > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(duration_s >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  if (!(warmup_s >= 0.0)) throw std::invalid_argument("warmup must be non-negative");
  if (!(sample_interval_s > 0.0)) throw std::invalid_argument("sampling interval must be positive");
  const double ratio = sample_interval_s / step_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
    throw std::invalid_argument("sampling interval must be a multiple of the step");
  if (!(lookahead_m > 0.0)) throw std::invalid_argument("lookahead must be positive");
}

double VehicleRecord::delay_s() const {
  if (!finished()) return 0.0;
  return std::max(0.0, travel_time_s() - ideal_s);
}

std::vector<double> dispatch_shuttles(double headway_min, double horizon_s) {
  if (!(headway_min > 0.0)) throw std::invalid_argument("headway must be positive");
  std::vector<double> out;
  const double h = headway_min * 60.0;
  for (int k = 0;; ++k) {
    const double t = k * h;
    if (t >= horizon_s - 1e-9) break;
    out.push_back(t);
  }
  return out;
}

namespace {

constexpr double kInf = units::kInfinity;
constexpr double kStoppedSpeed = 0.1;
constexpr double kLineZone = 2.5;       // stopped within this distance counts as at the line
constexpr double kYieldHorizon = 4.0;   // s to the line before a yield decision is taken
constexpr double kClearMargin = 1.0;    // s of slack a committed merge keeps over the conflicting arrival
constexpr double kLaneChangeCooldown = 3.0;
constexpr double kLaneChangeLookahead = 200.0;
constexpr double kCostSmoothing = 0.2;
constexpr double kConflictRange = 200.0;

enum class Block { kNone, kVehicle, kSignal, kStopLine, kYieldLine, kTransitStop, kLaneEnd, kLimit };

struct Veh {
  VehicleId id = 0;
  VehicleClass cls = VehicleClass::kHdv;
  DriverDraw draw;
  std::vector<Index> path;
  std::size_t pos = 0;
  Index prev_section = kNoIndex;
  int lane = 0;
  double offset = 0.0;
  double speed = 0.0;

  // transit
  std::vector<TransitStop> stops;
  std::vector<std::size_t> stop_pos;
  std::size_t next_stop = 0;
  bool dwelling = false;
  double dwell_left = 0.0;

  // intersection control on the current section's exit
  bool granted = false;
  bool at_line = false;
  double wait_s = 0.0;
  bool ran_red = false;
  Block stop_reason = Block::kNone;
  double lc_cooldown = 0.0;

  // courtesy pull-over
  bool pulled_over = false;
  double pull_left = 0.0;
  double courtesy_cooldown = 0.0;

  // bookkeeping
  std::size_t record = 0;
  double section_entry_s = 0.0;
  double section_excluded_s = 0.0;
  bool exited = false;

  // per-step scratch
  int list_pos = -1;
  int leader = -1;
  double leader_gap = kInf;
  Block obstacle = Block::kNone;
  double obstacle_dist = kInf;
  double new_speed = 0.0;
  double advance = 0.0;
  double desired_now = 0.0;
  int move_state = 0;
};

struct Ahead {
  int leader = -1;
  double leader_gap = kInf;
  Block obstacle = Block::kNone;
  double obstacle_dist = kInf;
  std::vector<std::pair<double, double>> limits;  // (distance, lower downstream desired speed)
  bool red_skipped = false;
};

struct Pending {
  Veh veh;
  std::optional<double> entry_speed;
};

enum class EventKind { kScripted = 0, kShuttle = 1, kDemand = 2 };

struct Event {
  double time_s = 0.0;
  EventKind kind = EventKind::kDemand;
  std::size_t seq = 0;
  // demand
  std::string origin, destination;
  // shuttle / scripted
  Index route = kNoIndex;
  std::optional<double> speed_cap;
  std::size_t scripted = 0;
};

}  // namespace

struct Simulation::Impl {
  const Network& net;
  SimInputs in;
  SimConfig cfg;

  std::int64_t step_index = 0;
  std::int64_t total_steps = 0;
  std::int64_t sample_every = 10;

  std::vector<Event> events;
  std::size_t next_event = 0;
  std::vector<Veh> fleet;
  std::map<Index, std::deque<Pending>> queues;
  std::vector<std::vector<std::vector<int>>> lanes;
  std::vector<char> turn_minor;
  std::vector<double> live_cost;
  std::map<std::pair<std::string, std::string>, std::vector<Path>> fallback_paths;
  AssignmentPlan plan;

  SimOutput out;
  std::vector<std::vector<int>> bins;  // [detector][bin]
  std::uint64_t queued_count = 0;
  bool finalized = false;

  Impl(const Network& n, SimInputs inputs, SimConfig config) : net(n), in(std::move(inputs)), cfg(config) {
    cfg.validate();
    in.hdv.validate();
    in.shuttle.validate();
    total_steps = static_cast<std::int64_t>(std::llround(cfg.horizon_s() / cfg.step_s));
    sample_every = static_cast<std::int64_t>(std::llround(cfg.sample_interval_s / cfg.step_s));
    out.measure_start_s = cfg.warmup_s;
    out.measure_end_s = cfg.horizon_s();
    lanes.resize(net.sections().size());
    for (Index s = 0; s < net.sections().size(); ++s) lanes[s].resize(net.section(s).lane_count);
    live_cost = free_flow_costs(net);
    classify_turns();
    const std::size_t nbins =
        static_cast<std::size_t>(std::ceil(cfg.duration_s / 300.0 - 1e-9));
    bins.resize(net.detectors().size());
    for (std::size_t d = 0; d < net.detectors().size(); ++d) {
      const double agg = net.detectors()[d].aggregation_s;
      bins[d].assign(static_cast<std::size_t>(std::ceil(cfg.duration_s / agg - 1e-9)), 0);
    }
    (void)nbins;
    build_plan();
    build_events();
  }

  double now() const { return static_cast<double>(step_index) * cfg.step_s; }

  // ---------------------------------------------------------------- setup

  void classify_turns() {
    const auto& turns = net.turns();
    turn_minor.assign(turns.size(), 0);
    for (Index t = 0; t < turns.size(); ++t) {
      const Turn& tr = turns[t];
      if (tr.control == TurnControl::kStop || tr.control == TurnControl::kYield) {
        turn_minor[t] = 1;
        continue;
      }
      // The first uncontrolled or signalized approach into a section has
      // priority; later ones give way when their green can overlap.
      for (Index o : net.incoming_turns(tr.to_section)) {
        if (o >= t) break;
        const Turn& other = turns[o];
        if (other.control == TurnControl::kUncontrolled) {
          turn_minor[t] = 1;
          break;
        }
        if (other.control == TurnControl::kSignal) {
          if (tr.control == TurnControl::kUncontrolled || greens_overlap(other, tr)) {
            turn_minor[t] = 1;
            break;
          }
        }
      }
    }
  }

  bool greens_overlap(const Turn& a, const Turn& b) const {
    if (a.signal != b.signal) return true;
    const auto& pa = net.signals()[a.signal].phases[a.phase];
    const auto& pb = net.signals()[b.signal].phases[b.phase];
    return pa.green_start_s < pb.green_end_s && pb.green_start_s < pa.green_end_s;
  }

  void build_plan() {
    if (in.plan) {
      plan = *in.plan;
      plan.validate();
      return;
    }
    if (in.demand.slices.empty()) return;
    const auto ff = free_flow_costs(net);
    CostFunction fixed = [ff](const std::vector<double>&) { return ff; };
    plan = iterate_assignment(net, in.demand, ChoiceModel::logit(), 1, 0.0, fixed).plan;
  }

  void build_events() {
    std::size_t seq = 0;
    for (std::size_t k = 0; k < in.scripted.size(); ++k) {
      Event e;
      e.time_s = in.scripted[k].time_s;
      e.kind = EventKind::kScripted;
      e.scripted = k;
      e.seq = seq++;
      events.push_back(e);
    }
    for (const auto& svc : in.shuttles) {
      const auto r = net.find_route(svc.route);
      if (!r) throw NetworkError("unknown transit route", svc.route);
      for (double t : dispatch_shuttles(svc.headway_min, cfg.horizon_s())) {
        Event e;
        e.time_s = t;
        e.kind = EventKind::kShuttle;
        e.route = *r;
        e.speed_cap = svc.speed_cap_mps;
        e.seq = seq++;
        events.push_back(e);
      }
    }
    for (std::size_t s = 0; s < in.demand.slices.size(); ++s) {
      const auto& slice = in.demand.slices[s];
      slice.trips.validate();
      Rng rng = make_stream(cfg.seed, kStreamDemand + s);
      for (const auto& a : inject_demand(slice, rng)) {
        Event e;
        e.time_s = a.time_s;
        e.kind = EventKind::kDemand;
        e.origin = slice.trips.centroids[a.origin];
        e.destination = slice.trips.centroids[a.destination];
        e.seq = seq++;
        events.push_back(e);
      }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      if (a.time_s != b.time_s) return a.time_s < b.time_s;
      if (a.kind != b.kind) return a.kind < b.kind;
      return a.seq < b.seq;
    });
  }

  // ------------------------------------------------------------- geometry

  static int entry_lane(const Turn& t, int lane, int n_to) {
    if (t.to_lane >= 0) return t.to_lane;
    return std::min(lane, n_to - 1);
  }

  bool lane_allowed(const Turn& t, int lane) const {
    const int n_from = net.section(t.from_section).lane_count;
    const int n_to = net.section(t.to_section).lane_count;
    if (t.from_lane >= 0) return lane == t.from_lane;
    if (t.to_lane >= 0) return lane == std::min(t.to_lane, n_from - 1);
    return lane < n_to;
  }

  const Turn* next_turn(const Veh& v) const {
    if (v.pos + 1 >= v.path.size()) return nullptr;
    return net.turn_between(v.path[v.pos], v.path[v.pos + 1]);
  }

  Index next_turn_index(const Veh& v) const {
    const Turn* t = next_turn(v);
    return t ? static_cast<Index>(t - net.turns().data()) : kNoIndex;
  }

  double desired_on(const Veh& v, Index section) const {
    return desired_speed(v.draw, net.section(section).speed_limit_mps);
  }

  double tau_for(const Veh& v) const {
    if (v.speed < kStoppedSpeed) {
      switch (v.stop_reason) {
        case Block::kSignal:
          return v.draw.reaction_at_signal_s;
        case Block::kVehicle:
        case Block::kStopLine:
        case Block::kYieldLine:
          return v.draw.reaction_at_stop_s;
        default:
          break;
      }
    }
    return v.draw.reaction_normal_s;
  }

  double virtual_brake(const Veh& v, double dist, double tau) const {
    LeaderView lv;
    lv.bumper_gap_m = dist;
    lv.is_virtual = true;
    return brake_speed(v.speed, lv, v.draw, tau);
  }

  bool line_blocks(const Veh& v, std::size_t pos, bool current, double t) const {
    const Turn* turn = net.turn_between(v.path[pos], v.path[pos + 1]);
    const Index ti = static_cast<Index>(turn - net.turns().data());
    if (turn->control == TurnControl::kSignal && !phase_green(net.signals()[turn->signal], turn->phase, t))
      return true;
    if (turn_minor[ti]) return !(current && v.granted);
    return false;
  }

  Block line_kind(const Turn& turn, Index ti, double t) const {
    if (turn.control == TurnControl::kSignal && !phase_green(net.signals()[turn.signal], turn.phase, t))
      return Block::kSignal;
    if (turn.control == TurnControl::kStop) return Block::kStopLine;
    if (turn_minor[ti]) return Block::kYieldLine;
    return Block::kNone;
  }

  /// Nearest vehicle and nearest stationary obstacle along the path.
  Ahead scan(const Veh& v, double tau, double t) const {
    Ahead a;
    double base = -v.offset;
    std::size_t p = v.pos;
    int lane = v.lane;
    bool first = true;
    const double here_desired = desired_on(v, v.path[v.pos]);
    while (true) {
      const Index sec = v.path[p];
      const Section& S = net.section(sec);
      if (a.leader < 0) {
        const auto& list = lanes[sec][lane];
        int cand = -1;
        if (first) {
          if (v.list_pos > 0) cand = list[v.list_pos - 1];
        } else if (!list.empty()) {
          cand = list.back();
        }
        if (cand >= 0) {
          const Veh& l = fleet[cand];
          a.leader = cand;
          a.leader_gap = base + l.offset - l.draw.length_m;
        }
      }
      if (v.next_stop < v.stops.size() && v.stop_pos[v.next_stop] == p) {
        const double d = base + v.stops[v.next_stop].offset_m;
        if (d >= -1.0) {
          a.obstacle = Block::kTransitStop;
          a.obstacle_dist = d;
          break;
        }
      }
      const double end_dist = base + S.length_m;
      if (p + 1 >= v.path.size()) break;
      const Index next = v.path[p + 1];
      const Turn* turn = net.turn_between(sec, next);
      const Index ti = static_cast<Index>(turn - net.turns().data());
      if (first && !lane_allowed(*turn, lane)) {
        a.obstacle = Block::kLaneEnd;
        a.obstacle_dist = end_dist;
        break;
      }
      const Block kind = line_kind(*turn, ti, t);
      if (kind == Block::kSignal) {
        const bool committed = first && v.granted;
        if (!committed && virtual_brake(v, end_dist, tau) >= v.speed - v.draw.max_decel * cfg.step_s) {
          a.obstacle = Block::kSignal;
          a.obstacle_dist = end_dist;
          break;
        }
        a.red_skipped = first;
      } else if (kind != Block::kNone && !(first && v.granted)) {
        a.obstacle = kind;
        a.obstacle_dist = end_dist;
        break;
      }
      const double vn = desired_on(v, next);
      if (vn < here_desired) a.limits.emplace_back(end_dist, vn);
      if (end_dist > cfg.lookahead_m) break;
      lane = entry_lane(*turn, lane, net.section(next).lane_count);
      base = end_dist;
      ++p;
      first = false;
    }
    return a;
  }

  /// Braking bound implied by `a` at speed v; `binding` reports its source.
  double bound(const Veh& v, double speed, const Ahead& a, double tau, Block* binding) const {
    double b = kInf;
    Block src = Block::kNone;
    if (a.leader >= 0) {
      const Veh& l = fleet[a.leader];
      LeaderView lv{a.leader_gap, l.speed, l.draw.max_decel, false};
      // A leader whose rear has not yet cleared a merge point blocks entry.
      b = a.leader_gap <= 0.0 ? 0.0 : brake_speed(speed, lv, v.draw, tau);
      src = Block::kVehicle;
    }
    if (a.obstacle != Block::kNone) {
      LeaderView lv;
      lv.bumper_gap_m = a.obstacle_dist;
      lv.is_virtual = true;
      const double ob = brake_speed(speed, lv, v.draw, tau);
      if (ob < b) {
        b = ob;
        src = a.obstacle;
      }
    }
    for (const auto& [d, vn] : a.limits) {
      const double lb = std::sqrt(vn * vn + 2.0 * v.draw.normal_decel * std::max(0.0, d - speed * cfg.step_s));
      if (lb < b) {
        b = lb;
        src = Block::kLimit;
      }
    }
    if (binding) *binding = src;
    return b;
  }

  void rebuild_lanes() {
    for (auto& sec : lanes)
      for (auto& l : sec) l.clear();
    for (int i = 0; i < static_cast<int>(fleet.size()); ++i) {
      const Veh& v = fleet[i];
      if (v.exited || v.pulled_over) {
        fleet[i].list_pos = -1;
        continue;
      }
      lanes[v.path[v.pos]][v.lane].push_back(i);
    }
    for (auto& sec : lanes)
      for (auto& l : sec) sort_lane(l);
  }

  void sort_lane(std::vector<int>& l) {
    std::sort(l.begin(), l.end(), [&](int a, int b) {
      if (fleet[a].offset != fleet[b].offset) return fleet[a].offset > fleet[b].offset;
      return fleet[a].id < fleet[b].id;
    });
    for (int k = 0; k < static_cast<int>(l.size()); ++k) fleet[l[k]].list_pos = k;
  }

  // ------------------------------------------------------------- release

  DriverDraw draw_for(VehicleClass cls, VehicleId id) const {
    Rng rng = make_stream(cfg.seed, kStreamVehicle + id);
    return sample_driver(cls == VehicleClass::kShuttle ? in.shuttle : in.hdv, rng);
  }

  void attach_route(Veh& v, Index route) {
    const TransitRoute& r = net.transit_routes()[route];
    std::size_t from = 0;
    for (const auto& stop : r.stops) {
      std::size_t k = from;
      while (k < v.path.size() && v.path[k] != stop.section) ++k;
      if (k == v.path.size()) throw std::invalid_argument("transit stop not on the vehicle path: " + r.id);
      v.stops.push_back(stop);
      v.stop_pos.push_back(k);
      from = k;
    }
  }

  const std::vector<Path>& fallback(const std::string& o, const std::string& d) {
    auto key = std::make_pair(o, d);
    auto it = fallback_paths.find(key);
    if (it != fallback_paths.end()) return it->second;
    const auto oc = net.find_centroid(o);
    const auto dc = net.find_centroid(d);
    if (!oc || !dc) throw RoutingError("demand references unknown centroid: " + o + "->" + d);
    auto paths = k_shortest_paths(net, *oc, *dc, 1, free_flow_costs(net));
    return fallback_paths.emplace(key, std::move(paths)).first->second;
  }

  std::vector<Index> choose_path(const Event& e, VehicleId id) {
    Rng rng = make_stream(cfg.seed, kStreamRoute + id);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double u_fixed = u(rng);
    const double u_path = u(rng);
    const OdPlan* od = plan.find(e.time_s, e.origin, e.destination);
    if (!od) return fallback(e.origin, e.destination).front().sections;
    std::vector<double> shares;
    if (u_fixed < plan.fixed_fraction) {
      shares = od->shares;
    } else {
      std::vector<double> costs;
      for (const auto& p : od->paths) {
        double c = 0.0;
        for (Index s : p.sections) c += live_cost[s];
        costs.push_back(c);
      }
      shares = plan.model.probabilities(net, od->paths, costs);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < shares.size(); ++k) {
      acc += shares[k];
      if (u_path < acc) return od->paths[k].sections;
    }
    return od->paths.back().sections;
  }

  void release_due(double t) {
    while (next_event < events.size() && events[next_event].time_s <= t + 1e-9) {
      const Event& e = events[next_event++];
      Pending p;
      Veh& v = p.veh;
      v.id = static_cast<VehicleId>(out.vehicles.size() + 1);
      VehicleRecord rec;
      rec.id = v.id;
      rec.release_s = e.time_s;
      switch (e.kind) {
        case EventKind::kScripted: {
          const auto& sd = in.scripted[e.scripted];
          v.cls = sd.cls;
          v.draw = sd.draw ? *sd.draw : draw_for(sd.cls, v.id);
          v.path = sd.path;
          for (std::size_t k = 0; k + 1 < v.path.size(); ++k)
            if (!net.turn_between(v.path[k], v.path[k + 1]))
              throw std::invalid_argument("scripted path is not connected");
          if (v.path.empty()) throw std::invalid_argument("scripted path is empty");
          if (sd.route) {
            const auto r = net.find_route(*sd.route);
            if (!r) throw NetworkError("unknown transit route", *sd.route);
            attach_route(v, *r);
            rec.route = *sd.route;
          }
          p.entry_speed = sd.entry_speed_mps;
          rec.tag = sd.tag;
          break;
        }
        case EventKind::kShuttle: {
          v.cls = VehicleClass::kShuttle;
          v.draw = draw_for(v.cls, v.id);
          if (e.speed_cap) v.draw.max_speed_mps = *e.speed_cap;
          const TransitRoute& r = net.transit_routes()[e.route];
          v.path = r.sections;
          attach_route(v, e.route);
          rec.route = r.id;
          break;
        }
        case EventKind::kDemand: {
          v.cls = VehicleClass::kHdv;
          v.draw = draw_for(v.cls, v.id);
          v.path = choose_path(e, v.id);
          rec.origin = e.origin;
          rec.destination = e.destination;
          break;
        }
      }
      rec.cls = v.cls;
      rec.desired_speed_mps = desired_on(v, v.path.front());
      v.record = out.vehicles.size();
      out.vehicles.push_back(rec);
      queues[v.path.front()].push_back(std::move(p));
      ++queued_count;
      ++out.stats.released;
    }
  }

  /// Vehicles heading from upstream sections into `target`, with their
  /// distance to its start. Follows feeders back up to kConflictRange.
  void approaching(Index target, Index skip_from, std::vector<std::pair<int, double>>& found,
                   bool minor_need_grant) const {
    struct Item {
      Index section;
      Index into;
      std::size_t depth;
      double extra;
      bool check_turn;
    };
    std::vector<Item> stack;
    for (Index ti : net.incoming_turns(target)) {
      const Turn& tr = net.turns()[ti];
      if (tr.from_section == skip_from) continue;
      stack.push_back({tr.from_section, target, 1, 0.0, true});
    }
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      const Section& S = net.section(it.section);
      for (const auto& lane : lanes[it.section]) {
        for (int c : lane) {
          const Veh& cv = fleet[c];
          // The vehicle must be routed through `into` and then `target`.
          std::size_t k = cv.pos + 1;
          if (k >= cv.path.size() || cv.path[k] != it.into) continue;
          if (it.into != target && (k + 1 >= cv.path.size() || cv.path[k + 1] != target)) continue;
          if (it.check_turn && minor_need_grant) {
            const Turn* tr = net.turn_between(it.section, target);
            const Index ti = static_cast<Index>(tr - net.turns().data());
            if (turn_minor[ti] && !cv.granted) continue;
          }
          found.emplace_back(c, S.length_m - cv.offset + it.extra);
        }
      }
      const double reach = S.length_m + it.extra;
      if (it.depth < 3 && reach < kConflictRange) {
        for (Index ti : net.incoming_turns(it.section)) {
          const Turn& tr = net.turns()[ti];
          stack.push_back({tr.from_section, it.section, it.depth + 1, reach, false});
        }
      }
    }
  }

  /// Earliest time to cover d from speed v when accelerating at a up to vmax;
  /// a stopped vehicle may pull away at any moment.
  static double arrival_time(double d, double v, double a, double vmax) {
    if (d <= 0.0) return 0.0;
    if (v >= vmax) return d / std::max(v, kStoppedSpeed);
    const double ramp = (vmax * vmax - v * v) / (2.0 * a);
    if (d <= ramp) return (-v + std::sqrt(v * v + 2.0 * a * d)) / a;
    return (vmax - v) / a + (d - ramp) / vmax;
  }

  /// Smallest time gap of conflicting traffic, or 0 when one of them could
  /// not brake for the merging vehicle.
  double conflict_gap(const Veh& v, Index target, Index from, double t) const {
    std::vector<std::pair<int, double>> found;
    approaching(target, from, found, true);
    double gap = kInf;
    for (const auto& [c, d] : found) {
      const Veh& cv = fleet[c];
      if (cv.pulled_over) continue;
      const Turn* tr = net.turn_between(cv.path[cv.pos], cv.path[cv.pos + 1]);
      if (tr && tr->control == TurnControl::kSignal && !phase_green(net.signals()[tr->signal], tr->phase, t) &&
          cv.pos + 1 < cv.path.size() && cv.path[cv.pos + 1] == target && !cv.ran_red)
        continue;
      gap = std::min(gap, arrival_time(d, cv.speed, cv.draw.max_accel, std::max(cv.desired_now, cv.speed)));
      LeaderView lv{d - v.draw.length_m, v.speed, v.draw.max_decel, false};
      const double b = brake_speed(cv.speed, lv, cv.draw, cv.draw.reaction_normal_s);
      if (d - v.draw.length_m <= cv.draw.clearance_m || b < cv.speed - cv.draw.normal_decel * cfg.step_s)
        return 0.0;
    }
    return gap;
  }

  void inject(double t) {
    for (auto& [sec, q] : queues) {
      if (q.empty()) continue;
      Pending& p = q.front();
      Veh& v = p.veh;
      const Section& S = net.section(sec);
      const Turn* first_turn = v.path.size() > 1 ? net.turn_between(v.path[0], v.path[1]) : nullptr;
      int best_lane = -1;
      double best_room = -kInf;
      for (int l = 0; l < S.lane_count; ++l) {
        if (first_turn && !lane_allowed(*first_turn, l)) continue;
        if (v.cls == VehicleClass::kShuttle && l > 0 && best_lane >= 0) continue;
        const auto& list = lanes[sec][l];
        const double room = list.empty() ? kInf : fleet[list.back()].offset - fleet[list.back()].draw.length_m;
        if (room > best_room) {
          best_room = room;
          best_lane = l;
        }
      }
      if (best_lane < 0) best_lane = 0;
      v.lane = best_lane;
      v.pos = 0;
      v.offset = 0.0;
      v.speed = 0.0;
      const auto& list = lanes[sec][best_lane];
      v.list_pos = static_cast<int>(list.size());
      const double tau = v.draw.reaction_normal_s;
      // Temporarily borrow fleet slot semantics: scan needs list positions of
      // the lane we would join.
      const double desired = desired_on(v, sec);
      double hi = p.entry_speed ? std::min(*p.entry_speed, desired) : desired;
      Ahead a = scan(v, tau, t);
      if (a.leader >= 0 && a.leader_gap - v.draw.clearance_m <= 0.0) continue;
      if (a.obstacle != Block::kNone && a.obstacle_dist <= 0.0) continue;
      auto ok = [&](double s) {
        Veh probe = v;
        probe.speed = s;
        return bound(probe, s, a, tau, nullptr) >= s;
      };
      double speed = hi;
      if (!ok(hi)) {
        double lo = 0.0;
        for (int k = 0; k < 40; ++k) {
          const double mid = 0.5 * (lo + hi);
          (ok(mid) ? lo : hi) = mid;
        }
        speed = lo;
      }
      // Upstream traffic already heading into this lane must be able to stop.
      std::vector<std::pair<int, double>> ups;
      approaching(sec, kNoIndex, ups, false);
      bool blocked = false;
      for (const auto& [c, d] : ups) {
        const Veh& cv = fleet[c];
        const Turn* tr = net.turn_between(cv.path[cv.pos], sec);
        if (!tr || cv.path[cv.pos + 1] != sec) {
          if (d - v.draw.length_m < 50.0) blocked = true;
          continue;
        }
        if (entry_lane(*tr, cv.lane, S.lane_count) != best_lane) continue;
        const double gap = d - v.draw.length_m;
        LeaderView lv{gap, speed, v.draw.max_decel, false};
        if (gap <= cv.draw.clearance_m ||
            brake_speed(cv.speed, lv, cv.draw, cv.draw.reaction_normal_s) < cv.speed - cv.draw.normal_decel * cfg.step_s)
          blocked = true;
      }
      if (blocked) continue;
      v.speed = speed;
      v.section_entry_s = t;
      auto& rec = out.vehicles[v.record];
      rec.entry_s = t;
      fleet.push_back(std::move(v));
      q.pop_front();
      --queued_count;
      ++out.stats.entered;
      auto& lst = lanes[sec][best_lane];
      lst.push_back(static_cast<int>(fleet.size()) - 1);
      sort_lane(lst);
    }
  }

  // --------------------------------------------------------- lane changes

  std::optional<LaneNeighbor> neighbor_ahead(const Veh& v, Index sec, int lane, int* idx) const {
    const auto& list = lanes[sec][lane];
    int cand = -1;
    for (int k = static_cast<int>(list.size()) - 1; k >= 0; --k) {
      const Veh& o = fleet[list[k]];
      if (o.offset > v.offset || (o.offset == v.offset && o.id < v.id)) {
        cand = list[k];
        break;
      }
    }
    double gap = 0.0;
    if (cand >= 0) {
      gap = fleet[cand].offset - fleet[cand].draw.length_m - v.offset;
    } else if (v.pos + 1 < v.path.size()) {
      const Index next = v.path[v.pos + 1];
      const Turn* tr = net.turn_between(sec, next);
      if (tr && lane_allowed(*tr, lane)) {
        const auto& nl = lanes[next][entry_lane(*tr, lane, net.section(next).lane_count)];
        if (!nl.empty()) {
          cand = nl.back();
          gap = net.section(sec).length_m - v.offset + fleet[cand].offset - fleet[cand].draw.length_m;
        }
      }
    }
    if (idx) *idx = cand;
    if (cand < 0) return std::nullopt;
    const Veh& o = fleet[cand];
    return LaneNeighbor{gap, o.speed, &o.draw, o.draw.reaction_normal_s};
  }

  std::optional<LaneNeighbor> neighbor_behind(const Veh& v, Index sec, int lane) const {
    const auto& list = lanes[sec][lane];
    for (int c : list) {
      const Veh& o = fleet[c];
      if (o.offset < v.offset || (o.offset == v.offset && o.id > v.id)) {
        const double gap = v.offset - v.draw.length_m - o.offset;
        return LaneNeighbor{gap, o.speed, &o.draw, tau_for(o)};
      }
    }
    return std::nullopt;
  }

  void lane_changes() {
    for (int i = 0; i < static_cast<int>(fleet.size()); ++i) {
      Veh& v = fleet[i];
      if (v.lc_cooldown > 0.0) v.lc_cooldown -= cfg.step_s;
      if (v.exited || v.pulled_over || v.dwelling || v.lc_cooldown > 0.0) continue;
      const Index sec = v.path[v.pos];
      const Section& S = net.section(sec);
      if (S.lane_count < 2) continue;
      if (v.offset < v.draw.length_m + 1.0) continue;
      const Turn* turn = next_turn(v);
      auto allowed = [&](int l) { return !turn || lane_allowed(*turn, l); };

      std::vector<std::pair<int, LaneChangeMotivation>> options;
      if (!allowed(v.lane)) {
        int target = -1;
        for (int d = 1; d < S.lane_count && target < 0; ++d) {
          if (v.lane - d >= 0 && allowed(v.lane - d)) target = v.lane - 1;
          else if (v.lane + d < S.lane_count && allowed(v.lane + d)) target = v.lane + 1;
        }
        if (target >= 0) options.emplace_back(target, LaneChangeMotivation::kTurnFeasibility);
      } else if (v.cls == VehicleClass::kHdv) {
        if (v.lane + 1 < S.lane_count && allowed(v.lane + 1))
          options.emplace_back(v.lane + 1, LaneChangeMotivation::kSpeedGain);
        if (v.lane - 1 >= 0 && allowed(v.lane - 1)) {
          options.emplace_back(v.lane - 1, LaneChangeMotivation::kSpeedGain);
          options.emplace_back(v.lane - 1, LaneChangeMotivation::kReturnToSlowLane);
        }
      }
      if (options.empty()) continue;
      const double tau = tau_for(v);
      const double desired = desired_on(v, sec);
      const auto current_leader = neighbor_ahead(v, sec, v.lane, nullptr);
      for (const auto& [target, motivation] : options) {
        LaneChangeInputs lc;
        lc.speed = v.speed;
        lc.desired = desired;
        lc.tau = tau;
        lc.step = cfg.step_s;
        lc.target_lane_exists = true;
        lc.motivation = motivation;
        lc.turn_lane_required = motivation == LaneChangeMotivation::kTurnFeasibility;
        lc.current_leader = current_leader;
        lc.target_leader = neighbor_ahead(v, sec, target, nullptr);
        lc.target_follower = neighbor_behind(v, sec, target);
        lc.lookahead_m = kLaneChangeLookahead;
        if (lc.target_leader && lc.target_leader->bumper_gap_m <= v.draw.clearance_m) continue;
        if (lc.target_follower && lc.target_follower->bumper_gap_m <= lc.target_follower->draw->clearance_m)
          continue;
        if (lane_change_decision(lc, v.draw) != LaneDecision::kChange) continue;
        auto& from = lanes[sec][v.lane];
        from.erase(std::find(from.begin(), from.end(), i));
        for (int k = 0; k < static_cast<int>(from.size()); ++k) fleet[from[k]].list_pos = k;
        v.lane = target;
        auto& to = lanes[sec][target];
        to.push_back(i);
        sort_lane(to);
        v.lc_cooldown = kLaneChangeCooldown;
        ++out.stats.lane_changes;
        break;
      }
    }
  }

  // ------------------------------------------------------ junction control

  /// Whether the last vehicle already in the entry lane leaves room to follow.
  bool entry_clear(const Veh& v, const Turn& turn) const {
    const Section& to = net.section(turn.to_section);
    const auto& list = lanes[turn.to_section][entry_lane(turn, v.lane, to.lane_count)];
    if (list.empty()) return true;
    const Veh& tail = fleet[list.back()];
    const double d = net.section(v.path[v.pos]).length_m - v.offset;
    LeaderView lv{d + tail.offset - tail.draw.length_m, tail.speed, tail.draw.max_decel, false};
    if (lv.bumper_gap_m <= v.draw.clearance_m) return false;
    return brake_speed(v.speed, lv, v.draw, v.draw.reaction_normal_s) >= v.speed - v.draw.normal_decel * cfg.step_s;
  }

  void update_grants(double t) {
    for (auto& v : fleet) {
      if (v.exited || v.pulled_over) continue;
      const Index ti = next_turn_index(v);
      if (ti == kNoIndex) continue;
      const Turn& turn = net.turns()[ti];
      if (!turn_minor[ti]) continue;
      const Index sec = v.path[v.pos];
      const double d = net.section(sec).length_m - v.offset;
      const bool stopped_near = v.speed < kStoppedSpeed && d < kLineZone;
      if (v.list_pos != 0) continue;
      if (turn.control == TurnControl::kStop) {
        if (stopped_near) v.at_line = true;
        if (!v.at_line) continue;
      } else {
        const bool eligible = stopped_near || (v.speed >= kStoppedSpeed && d / v.speed <= kYieldHorizon);
        if (!eligible) continue;
      }
      if (turn.control == TurnControl::kSignal && !phase_green(net.signals()[turn.signal], turn.phase, t)) continue;
      v.wait_s += cfg.step_s;
      const double gap = entry_clear(v, turn) ? conflict_gap(v, turn.to_section, sec, t) : 0.0;
      if (v.granted) {
        // A committed vehicle keeps its grant unless it can no longer clear
        // the conflict point in time and can still stop at the line.
        const double a = v.draw.max_accel;
        const double clear = (-v.speed + std::sqrt(v.speed * v.speed + 2.0 * a * (d + v.draw.length_m))) / a;
        const bool can_stop = virtual_brake(v, d, v.draw.reaction_normal_s) >= v.speed - v.draw.max_decel * cfg.step_s;
        if (gap < clear + kClearMargin && can_stop) v.granted = false;
      } else if (yield_gap_accept(v.wait_s, v.draw, gap, in.yield) == YieldDecision::kAccept) {
        v.granted = true;
      }
    }
  }

  // ---------------------------------------------------------------- move

  void compute_speeds(double t) {
    for (auto& v : fleet) {
      v.move_state = 0;
      v.leader = -1;
      v.obstacle = Block::kNone;
      v.obstacle_dist = kInf;
      if (v.exited) continue;
      v.desired_now = desired_on(v, v.path[v.pos]);
      if (v.dwelling || v.pulled_over) {
        v.new_speed = 0.0;
        continue;
      }
      const double tau = tau_for(v);
      const Ahead a = scan(v, tau, t);
      if (a.red_skipped && !v.ran_red) {
        v.ran_red = true;
        ++out.stats.red_runs;
      }
      Block binding = Block::kNone;
      const double b = bound(v, v.speed, a, tau, &binding);
      v.new_speed = car_following_speed_capped(v.speed, b, v.draw, v.desired_now, tau, cfg.step_s);
      v.leader = a.leader;
      v.leader_gap = a.leader_gap;
      v.obstacle = a.obstacle;
      v.obstacle_dist = a.obstacle_dist;
      if (v.new_speed < kStoppedSpeed) {
        if (binding != Block::kNone && binding != Block::kLimit) v.stop_reason = binding;
        if (binding == Block::kVehicle && fleet[a.leader].speed >= kStoppedSpeed) v.stop_reason = Block::kNone;
      } else {
        v.stop_reason = Block::kNone;
      }
    }
  }

  void count_detectors(Index sec, double from, double to, double t, double adv_before, double adv_total) {
    for (Index d : net.detectors_on(sec)) {
      const Detector& det = net.detectors()[d];
      if (det.offset_m > from && det.offset_m <= to) {
        const double tc = t + cfg.step_s * (adv_before + det.offset_m - from) / adv_total;
        if (tc < cfg.warmup_s || tc >= cfg.horizon_s()) continue;
        const auto bin = static_cast<std::size_t>((tc - cfg.warmup_s) / det.aggregation_s);
        if (bin < bins[d].size()) ++bins[d][bin];
      }
    }
  }

  void complete_passage(Veh& v, double exit_s) {
    const Index sec = v.path[v.pos];
    SectionPassage p;
    p.vehicle = v.id;
    p.section = sec;
    p.path_pos = v.pos;
    p.entry_s = v.section_entry_s;
    p.exit_s = exit_s;
    p.ideal_s = net.section(sec).length_m / desired_on(v, sec);
    p.excluded_s = v.section_excluded_s;
    out.passages.push_back(p);
    auto& rec = out.vehicles[v.record];
    rec.distance_m += net.section(sec).length_m;
    rec.ideal_s += p.ideal_s;
    rec.excluded_s += p.excluded_s;
    const double observed = exit_s - v.section_entry_s - v.section_excluded_s;
    live_cost[sec] += kCostSmoothing * (observed - live_cost[sec]);
  }

  void move(int i, double t) {
    Veh& v = fleet[i];
    if (v.move_state != 0 || v.exited) return;
    v.move_state = 1;
    if (v.leader >= 0 && fleet[v.leader].move_state == 0) move(v.leader, t);
    const double v0 = v.speed;
    double v1 = v.new_speed;
    double adv = 0.5 * (v0 + v1) * cfg.step_s;
    double cap = kInf;
    bool vehicle_cap = false;
    if (v.leader >= 0) {
      const Veh& l = fleet[v.leader];
      const double lead_adv = l.move_state == 2 ? l.advance : 0.0;
      cap = std::max(0.0, v.leader_gap + lead_adv);
      vehicle_cap = true;
    }
    if (v.obstacle != Block::kNone && v.obstacle_dist < cap) {
      cap = std::max(0.0, v.obstacle_dist);
      vehicle_cap = false;
    }
    if (adv > cap + 1e-12) {
      const double clipped = adv - cap;
      adv = cap;
      v1 = std::clamp(2.0 * adv / cfg.step_s - v0, 0.0, v1);
      if (vehicle_cap && clipped > 1e-3) ++out.stats.guard_activations;
    }
    if (v1 < -1e-12 || v1 > v.desired_now + 1e-9) ++out.stats.speed_violations;
    if (v1 - v0 > v.draw.max_accel * cfg.step_s + 1e-9 || v0 - v1 > v.draw.max_decel * cfg.step_s + 1e-9)
      ++out.stats.accel_violations;
    v.advance = adv;
    v.speed = v1;

    double x0 = v.offset;
    double x = v.offset + adv;
    double done = 0.0;
    while (true) {
      const Index sec = v.path[v.pos];
      const double L = net.section(sec).length_m;
      if (adv > 0.0) count_detectors(sec, x0, std::min(x, L), t, done, adv);
      if (x <= L) break;
      const double tc = t + cfg.step_s * (done + L - x0) / adv;
      complete_passage(v, tc);
      if (v.pos + 1 >= v.path.size()) {
        v.exited = true;
        auto& rec = out.vehicles[v.record];
        rec.exit_s = tc;
        ++out.stats.exited;
        break;
      }
      const Turn* turn = net.turn_between(sec, v.path[v.pos + 1]);
      done += L - x0;
      x -= L;
      x0 = 0.0;
      v.prev_section = sec;
      v.lane = entry_lane(*turn, v.lane, net.section(turn->to_section).lane_count);
      ++v.pos;
      v.section_entry_s = tc;
      v.section_excluded_s = 0.0;
      v.granted = false;
      v.at_line = false;
      v.wait_s = 0.0;
      v.ran_red = false;
    }
    v.offset = x;
    v.move_state = 2;
  }

  void transit_and_courtesy() {
    for (auto& v : fleet) {
      if (v.exited || v.cls != VehicleClass::kShuttle) continue;
      if (v.dwelling) {
        v.dwell_left -= cfg.step_s;
        if (v.dwell_left <= 1e-9) {
          v.dwelling = false;
          ++v.next_stop;
        }
        continue;
      }
      if (v.next_stop < v.stops.size() && v.stop_pos[v.next_stop] == v.pos) {
        const double d = v.stops[v.next_stop].offset_m - v.offset;
        if (d < -1.0) {
          ++v.next_stop;
        } else if (d <= 1.0 && v.speed < 0.3) {
          v.dwelling = true;
          v.speed = 0.0;
          v.dwell_left = v.stops[v.next_stop].dwell_s;
        }
      } else if (v.next_stop < v.stops.size() && v.stop_pos[v.next_stop] < v.pos) {
        ++v.next_stop;
      }
    }
    if (!cfg.courtesy.enabled) return;
    for (int i = 0; i < static_cast<int>(fleet.size()); ++i) {
      Veh& v = fleet[i];
      if (v.exited || v.cls != VehicleClass::kShuttle || v.dwelling) continue;
      if (v.courtesy_cooldown > 0.0) v.courtesy_cooldown -= cfg.step_s;
      if (v.pulled_over) {
        v.pull_left -= cfg.step_s;
        v.section_excluded_s += cfg.step_s;
        if (v.pull_left <= 0.0 && can_rejoin(v)) {
          v.pulled_over = false;
          v.courtesy_cooldown = 120.0;
        }
        continue;
      }
      if (v.courtesy_cooldown > 0.0 || v.list_pos < 0) continue;
      const auto& list = lanes[v.path[v.pos]][v.lane];
      int queue = 0;
      for (std::size_t k = v.list_pos + 1; k < list.size(); ++k) {
        const Veh& f = fleet[list[k]];
        if (v.offset - f.offset > cfg.courtesy.queue_range_m) break;
        if (f.speed < 3.0) ++queue;
      }
      if (queue >= cfg.courtesy.min_queue) {
        v.pulled_over = true;
        v.speed = 0.0;
        v.pull_left = cfg.courtesy.duration_s;
      }
    }
  }

  bool can_rejoin(const Veh& v) const {
    const Index sec = v.path[v.pos];
    const auto ahead = neighbor_ahead(v, sec, v.lane, nullptr);
    if (ahead && ahead->bumper_gap_m <= v.draw.clearance_m) return false;
    const auto behind = neighbor_behind(v, sec, v.lane);
    if (behind) {
      if (behind->bumper_gap_m <= behind->draw->clearance_m) return false;
      LeaderView lv{behind->bumper_gap_m, 0.0, v.draw.max_decel, false};
      if (brake_speed(behind->speed_mps, lv, *behind->draw, behind->tau) <
          behind->speed_mps - behind->draw->normal_decel * cfg.step_s)
        return false;
    }
    return true;
  }

  // -------------------------------------------------------------- checks

  void check_gaps(double t) {
    for (Index s = 0; s < lanes.size(); ++s) {
      const double L = net.section(s).length_m;
      for (int ln = 0; ln < static_cast<int>(lanes[s].size()); ++ln) {
        const auto& list = lanes[s][ln];
        for (std::size_t k = 0; k < list.size(); ++k) {
          const Veh& f = fleet[list[k]];
          double gap = kInf;
          if (k > 0) {
            const Veh& l = fleet[list[k - 1]];
            gap = l.offset - l.draw.length_m - f.offset;
          } else if (f.pos + 1 < f.path.size()) {
            const Index next = f.path[f.pos + 1];
            const Turn* tr = net.turn_between(s, next);
            if (lane_allowed(*tr, ln)) {
              const auto& nl = lanes[next][entry_lane(*tr, ln, net.section(next).lane_count)];
              if (!nl.empty() && fleet[nl.back()].prev_section == s)
                gap = L - f.offset + fleet[nl.back()].offset - fleet[nl.back()].draw.length_m;
            }
          }
          out.stats.min_gap_m = std::min(out.stats.min_gap_m, gap);
          if (gap < -1e-6) {
            std::ostringstream msg;
            msg << "negative gap " << gap << " m behind vehicle " << f.id << " on section " << net.section(s).id
                << " lane " << ln << " at t=" << t;
            throw SimulationError(msg.str());
          }
        }
      }
    }
  }

  void record_samples(double t) {
    if (!cfg.record_trajectories) return;
    for (const auto& v : fleet) {
      if (v.exited) continue;
      out.trajectories.push_back({t, v.id, v.cls, v.path[v.pos], v.offset, v.speed, v.pulled_over});
    }
  }

  // ---------------------------------------------------------------- step

  void step() {
    if (step_index >= total_steps) return;
    const double t = now();
    release_due(t);
    rebuild_lanes();
    lane_changes();
    inject(t);
    update_grants(t);
    compute_speeds(t);
    for (int i = 0; i < static_cast<int>(fleet.size()); ++i) move(i, t);
    transit_and_courtesy();
    std::erase_if(fleet, [](const Veh& v) { return v.exited; });
    ++step_index;
    ++out.stats.steps;
    const double t1 = now();
    rebuild_lanes();
    check_gaps(t1);
    out.stats.in_network = fleet.size();
    out.stats.queued = queued_count;
    out.stats.max_queued = std::max(out.stats.max_queued, queued_count);
    if (out.stats.released != out.stats.exited + out.stats.in_network + out.stats.queued)
      throw SimulationError("vehicle conservation violated at t=" + std::to_string(t1));
    if (step_index % sample_every == 0 && t1 >= cfg.warmup_s - 1e-9) record_samples(t1);
  }

  Snapshot snapshot() const {
    Snapshot s;
    s.t_s = now();
    s.queued = queued_count;
    s.stats = out.stats;
    for (const auto& v : fleet) {
      VehicleState vs;
      vs.id = v.id;
      vs.cls = v.cls;
      vs.section = v.path[v.pos];
      vs.lane = v.lane;
      vs.offset_m = v.offset;
      vs.speed_mps = v.speed;
      vs.desired_mps = desired_on(v, v.path[v.pos]);
      vs.length_m = v.draw.length_m;
      vs.dwelling = v.dwelling;
      vs.pulled_over = v.pulled_over;
      vs.path = v.path;
      vs.path_pos = v.pos;
      s.vehicles.push_back(std::move(vs));
    }
    return s;
  }

  SimOutput finish() {
    while (step_index < total_steps) step();
    if (!finalized) {
      for (std::size_t d = 0; d < bins.size(); ++d)
        for (std::size_t b = 0; b < bins[d].size(); ++b)
          out.detector_counts.push_back(
              {static_cast<Index>(d), cfg.warmup_s + b * net.detectors()[d].aggregation_s, bins[d][b]});
      std::sort(out.passages.begin(), out.passages.end(), [](const SectionPassage& a, const SectionPassage& b) {
        if (a.vehicle != b.vehicle) return a.vehicle < b.vehicle;
        return a.path_pos < b.path_pos;
      });
      out.traversals = extract_traversals(out, net, net.segment_groups());
      finalized = true;
    }
    return out;
  }
};

Simulation::Simulation(const Network& net, SimInputs inputs, SimConfig config)
    : impl_(std::make_unique<Impl>(net, std::move(inputs), config)) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::step() { impl_->step(); }
bool Simulation::finished() const { return impl_->step_index >= impl_->total_steps; }
double Simulation::time() const { return impl_->now(); }
Snapshot Simulation::snapshot() const { return impl_->snapshot(); }
SimOutput Simulation::finish() { return impl_->finish(); }

SimOutput run(const Network& net, const SimInputs& inputs, const SimConfig& config) {
  Simulation sim(net, inputs, config);
  return sim.finish();
}

std::vector<Traversal> extract_traversals(const SimOutput& output, const Network& net,
                                          const std::vector<SegmentGroup>& groups) {
  std::vector<Traversal> result;
  auto cls_of = [&](VehicleId id) {
    auto it = std::lower_bound(output.vehicles.begin(), output.vehicles.end(), id,
                               [](const VehicleRecord& r, VehicleId v) { return r.id < v; });
    return it != output.vehicles.end() && it->id == id ? it->cls : VehicleClass::kHdv;
  };
  const auto& ps = output.passages;
  std::size_t begin = 0;
  while (begin < ps.size()) {
    std::size_t end = begin;
    while (end < ps.size() && ps[end].vehicle == ps[begin].vehicle) ++end;
    for (std::size_t i = begin; i < end; ++i) {
      for (Index g = 0; g < groups.size(); ++g) {
        const auto& secs = groups[g].sections;
        if (secs.empty() || ps[i].section != secs.front() || i + secs.size() > end) continue;
        bool match = true;
        for (std::size_t k = 0; k < secs.size() && match; ++k)
          match = ps[i + k].section == secs[k] && ps[i + k].path_pos == ps[i].path_pos + k;
        if (!match) continue;
        Traversal tr;
        tr.vehicle = ps[i].vehicle;
        tr.cls = cls_of(tr.vehicle);
        tr.group = g;
        tr.entry_s = ps[i].entry_s;
        tr.exit_s = ps[i + secs.size() - 1].exit_s;
        for (std::size_t k = 0; k < secs.size(); ++k) {
          tr.distance_m += net.section(secs[k]).length_m;
          tr.ideal_s += ps[i + k].ideal_s;
          tr.excluded_s += ps[i + k].excluded_s;
        }
        if (tr.entry_s < output.measure_start_s - 1e-9 || tr.exit_s > output.measure_end_s + 1e-9) continue;
        result.push_back(tr);
      }
    }
    begin = end;
  }
  return result;
}

}  // namespace shuttlesim
