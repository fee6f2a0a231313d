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

#include "shuttlesim/fixtures.hpp"

#include <cmath>
#include <stdexcept>

#include "shuttlesim/units.hpp"

namespace shuttlesim {

namespace {

std::string num(int k) { return std::to_string(k); }

double limit_at(const CorridorLayout& c, int k) {
  if (c.limits_mph.empty()) throw std::invalid_argument("corridor needs a speed limit");
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(k), c.limits_mph.size() - 1);
  return units::mph(c.limits_mph[i]);
}

bool has_side(const CorridorLayout& c, int k) {
  for (int s : c.side_nodes)
    if (s == k) return true;
  return false;
}

}  // namespace

void add_corridor(NetworkData& d, const CorridorLayout& c) {
  const int n = c.sections;
  if (n < 1) throw std::invalid_argument("corridor needs at least one section");
  const std::string& p = c.name;
  auto node = [&](int k) { return p + "N" + num(k); };
  auto fwd = [&](int k) { return p + c.fwd + num(k); };  // N(k-1) -> N(k)
  auto bwd = [&](int k) { return p + c.bwd + num(k); };  // N(n-k+1) -> N(n-k)
  const std::string c0 = p + "C0", cn = p + "C" + num(n);
  const std::string t0 = p + "T0", tn = p + "T" + num(n);

  for (int k = 0; k <= n; ++k) d.nodes.push_back({node(k)});
  d.nodes.push_back({c0});
  d.nodes.push_back({cn});
  d.nodes.push_back({t0});
  d.nodes.push_back({tn});
  for (int k : c.side_nodes) d.nodes.push_back({p + "S" + num(k)});

  for (int k = 1; k <= n; ++k)
    d.sections.push_back({fwd(k), node(k - 1), node(k), c.section_length_m, c.lanes, limit_at(c, k - 1)});
  for (int k = 1; k <= n; ++k)
    d.sections.push_back({bwd(k), node(n - k + 1), node(n - k), c.section_length_m, c.lanes, limit_at(c, n - k)});

  const double end_limit0 = limit_at(c, 0), end_limitn = limit_at(c, n - 1);
  d.sections.push_back({p + "_enter0", c0, node(0), 100.0, 1, end_limit0});
  d.sections.push_back({p + "_leave0", node(0), c0, 100.0, 1, end_limit0});
  d.sections.push_back({p + "_enter" + num(n), cn, node(n), 100.0, 1, end_limitn});
  d.sections.push_back({p + "_leave" + num(n), node(n), cn, 100.0, 1, end_limitn});
  d.sections.push_back({p + "_dep0", t0, node(0), c.stub_length_m, 1, end_limit0});
  d.sections.push_back({p + "_arr0", node(0), t0, c.stub_length_m, 1, end_limit0});
  d.sections.push_back({p + "_dep" + num(n), tn, node(n), c.stub_length_m, 1, end_limitn});
  d.sections.push_back({p + "_arr" + num(n), node(n), tn, c.stub_length_m, 1, end_limitn});
  for (int k : c.side_nodes) {
    const double lim = limit_at(c, k - 1);
    d.sections.push_back({p + "_side" + num(k) + "_in", p + "S" + num(k), node(k), 150.0, 1, lim});
    d.sections.push_back({p + "_side" + num(k) + "_out", node(k), p + "S" + num(k), 150.0, 1, lim});
  }

  auto turn = [&](const std::string& from, const std::string& to, TurnControl ctl, const std::string& phase = "") {
    TurnSpec t;
    t.from_section = from;
    t.to_section = to;
    t.control = ctl;
    t.phase = phase;
    d.turns.push_back(t);
  };

  // West/first terminal.
  turn(p + "_enter0", fwd(1), TurnControl::kUncontrolled);
  turn(p + "_dep0", fwd(1), TurnControl::kYield);
  turn(bwd(n), p + "_leave0", TurnControl::kUncontrolled);
  turn(bwd(n), p + "_arr0", TurnControl::kUncontrolled);

  // Internal nodes.
  for (int k = 1; k < n; ++k) {
    const bool signal = c.signalized;
    const TurnControl main = signal ? TurnControl::kSignal : TurnControl::kUncontrolled;
    const std::string main_phase = signal ? "main" : "";
    turn(fwd(k), fwd(k + 1), main, main_phase);
    turn(bwd(n - k), bwd(n - k + 1), main, main_phase);
    if (has_side(c, k)) {
      const std::string in = p + "_side" + num(k) + "_in", out = p + "_side" + num(k) + "_out";
      const TurnControl side = signal ? TurnControl::kSignal : TurnControl::kStop;
      const std::string side_phase = signal ? "side" : "";
      turn(in, fwd(k + 1), side, side_phase);
      turn(in, bwd(n - k + 1), side, side_phase);
      turn(fwd(k), out, main, main_phase);
      turn(bwd(n - k), out, main, main_phase);
    }
    if (signal) {
      SignalPlanSpec plan;
      plan.node = node(k);
      plan.cycle_s = c.cycle_s;
      const double travel = c.section_length_m / limit_at(c, k - 1);
      plan.offset_s = std::fmod(k * travel, c.cycle_s);
      const double main_end = has_side(c, k) ? 0.65 * c.cycle_s : 0.75 * c.cycle_s;
      plan.phases.push_back({"main", 0.0, main_end});
      plan.phases.push_back({"side", main_end + 4.0, c.cycle_s - 4.0});
      d.signals.push_back(plan);
    }
  }

  // Last terminal.
  turn(fwd(n), p + "_leave" + num(n), TurnControl::kUncontrolled);
  turn(fwd(n), p + "_arr" + num(n), TurnControl::kUncontrolled);
  turn(p + "_enter" + num(n), bwd(1), TurnControl::kUncontrolled);
  turn(p + "_dep" + num(n), bwd(1), TurnControl::kYield);
  turn(p + "_arr" + num(n), p + "_dep" + num(n), TurnControl::kUncontrolled);

  // Centroids.
  d.centroids.push_back({c0, CentroidKind::kExternal,
                         {{p + "_enter0", ConnectorDirection::kOut}, {p + "_leave0", ConnectorDirection::kIn}}});
  d.centroids.push_back({cn, CentroidKind::kExternal,
                         {{p + "_enter" + num(n), ConnectorDirection::kOut},
                          {p + "_leave" + num(n), ConnectorDirection::kIn}}});
  for (int k : c.side_nodes)
    d.centroids.push_back({p + "S" + num(k), CentroidKind::kInternal,
                           {{p + "_side" + num(k) + "_in", ConnectorDirection::kOut},
                            {p + "_side" + num(k) + "_out", ConnectorDirection::kIn}}});

  // Shuttle route: out along the forward sections, turn at the far
  // terminal, back along the backward sections.
  TransitRouteSpec route;
  route.id = p;
  route.sections.push_back(p + "_dep0");
  for (int k = 1; k <= n; ++k) route.sections.push_back(fwd(k));
  route.sections.push_back(p + "_arr" + num(n));
  route.sections.push_back(p + "_dep" + num(n));
  for (int k = 1; k <= n; ++k) route.sections.push_back(bwd(k));
  route.sections.push_back(p + "_arr0");
  route.stops.push_back({p + "_arr" + num(n), c.stop_offset_m, c.dwell_s});
  route.stops.push_back({p + "_arr0", c.stop_offset_m, c.dwell_s});
  d.transit_routes.push_back(route);

  SegmentGroupSpec gf{p + c.fwd, {}}, gb{p + c.bwd, {}};
  for (int k = 1; k <= n; ++k) {
    gf.sections.push_back(fwd(k));
    gb.sections.push_back(bwd(k));
  }
  d.segment_groups.push_back(gf);
  d.segment_groups.push_back(gb);

  if (c.detectors) {
    for (int k = 1; k <= n; ++k) {
      d.detectors.push_back({"D" + fwd(k), fwd(k), 0.5 * c.section_length_m, 300.0});
      d.detectors.push_back({"D" + bwd(k), bwd(k), 0.5 * c.section_length_m, 300.0});
    }
  }
}

OdMatrix corridor_demand(const CorridorLayout& c, double through, double side) {
  std::vector<std::string> ids{c.name + "C0", c.name + "C" + num(c.sections)};
  for (int k : c.side_nodes) ids.push_back(c.name + "S" + num(k));
  OdMatrix m(ids);
  m(0, 1) = through;
  m(1, 0) = through;
  for (std::size_t s = 2; s < ids.size(); ++s) {
    m(s, 0) = m(s, 1) = side;
    m(0, s) = m(1, s) = side;
  }
  return m;
}

OdMatrix merge_matrices(const std::vector<OdMatrix>& parts) {
  std::vector<std::string> ids;
  for (const auto& p : parts) ids.insert(ids.end(), p.centroids.begin(), p.centroids.end());
  OdMatrix m(ids);
  std::size_t base = 0;
  for (const auto& p : parts) {
    for (std::size_t o = 0; o < p.size(); ++o)
      for (std::size_t d = 0; d < p.size(); ++d) m(base + o, base + d) = p(o, d);
    base += p.size();
  }
  return m;
}

namespace {

CorridorLayout route1_layout() {
  CorridorLayout c;
  c.name = "R1";
  c.fwd = "WE";
  c.bwd = "EW";
  c.sections = 3;
  // Round trip including the four terminal stubs is 2.19 mi.
  c.section_length_m = (units::miles(2.19) - 4 * c.stub_length_m) / 6.0;
  c.limits_mph = {25.0};
  c.side_nodes = {1};
  return c;
}

CorridorLayout route3_layout() {
  CorridorLayout c;
  c.name = "R3";
  c.fwd = "NS";
  c.bwd = "SN";
  c.sections = 3;
  c.section_length_m = (units::miles(2.29) - 4 * c.stub_length_m) / 6.0;
  c.limits_mph = {20.0, 20.0, 15.0};
  c.side_nodes = {2};
  return c;
}

CorridorLayout route6_layout() {
  CorridorLayout c;
  c.name = "R6";
  c.fwd = "EW";
  c.bwd = "WE";
  c.sections = 5;
  c.section_length_m = (units::miles(4.96) - 4 * c.stub_length_m) / 10.0;
  c.limits_mph = {35.0};
  c.lanes = 2;
  c.side_nodes = {1, 2, 3, 4};
  c.signalized = true;
  c.cycle_s = 80.0;
  return c;
}

}  // namespace

Fixture corridor_fixture() {
  Fixture f;
  f.name = "corridor";
  const auto c = route1_layout();
  add_corridor(f.network, c);
  f.offpeak = corridor_demand(c, 300.0, 40.0);
  f.peak = corridor_demand(c, 450.0, 60.0);
  f.shuttle_routes = {c.name};
  return f;
}

Fixture district_fixture() {
  Fixture f;
  f.name = "district";
  const auto r1 = route1_layout(), r3 = route3_layout(), r6 = route6_layout();
  add_corridor(f.network, r1);
  add_corridor(f.network, r3);
  add_corridor(f.network, r6);
  f.offpeak = merge_matrices({corridor_demand(r1, 250.0, 40.0), corridor_demand(r3, 150.0, 30.0),
                              corridor_demand(r6, 450.0, 40.0)});
  f.peak = merge_matrices({corridor_demand(r1, 380.0, 60.0), corridor_demand(r3, 230.0, 45.0),
                           corridor_demand(r6, 700.0, 60.0)});
  f.shuttle_routes = {r1.name, r3.name, r6.name};
  return f;
}

Fixture ring_fixture() {
  Fixture f;
  f.name = "ring";
  auto& d = f.network;
  const int n = 4;
  auto rn = [](int k) { return "Q" + num((k + 4) % 4); };
  auto cw = [](int k) { return "QC" + num((k + 4) % 4); };   // Qk -> Qk+1
  auto ccw = [](int k) { return "QA" + num((k + 4) % 4); };  // Qk+1 -> Qk
  const double limit = units::mph(30.0);
  for (int k = 0; k < n; ++k) {
    d.nodes.push_back({rn(k)});
    d.nodes.push_back({"Z" + num(k)});
  }
  for (int k = 0; k < n; ++k) {
    d.sections.push_back({cw(k), rn(k), rn(k + 1), 400.0 + 50.0 * k, 1, limit});
    d.sections.push_back({ccw(k), rn(k + 1), rn(k), 400.0 + 50.0 * k, 1, limit});
  }
  for (int k = 0; k < n; ++k) {
    d.sections.push_back({"Z" + num(k) + "_enter", "Z" + num(k), rn(k), 100.0, 1, limit});
    d.sections.push_back({"Z" + num(k) + "_leave", rn(k), "Z" + num(k), 100.0, 1, limit});
  }
  auto turn = [&](const std::string& a, const std::string& b, TurnControl ctl) {
    TurnSpec t;
    t.from_section = a;
    t.to_section = b;
    t.control = ctl;
    d.turns.push_back(t);
  };
  for (int k = 0; k < n; ++k) {
    // At node Qk: arrivals are cw(k-1) and ccw(k).
    turn(cw(k - 1), cw(k), TurnControl::kUncontrolled);
    turn(ccw(k), ccw(k - 1), TurnControl::kUncontrolled);
    turn(cw(k - 1), "Z" + num(k) + "_leave", TurnControl::kUncontrolled);
    turn(ccw(k), "Z" + num(k) + "_leave", TurnControl::kYield);
    turn("Z" + num(k) + "_enter", cw(k), TurnControl::kYield);
    turn("Z" + num(k) + "_enter", ccw(k - 1), TurnControl::kYield);
  }
  for (int k = 0; k < n; ++k) {
    d.centroids.push_back({"Z" + num(k), CentroidKind::kInternal,
                           {{"Z" + num(k) + "_enter", ConnectorDirection::kOut},
                            {"Z" + num(k) + "_leave", ConnectorDirection::kIn}}});
  }
  for (int k = 0; k < n; ++k) {
    d.detectors.push_back({"D" + cw(k), cw(k), 200.0, 300.0});
    d.detectors.push_back({"D" + ccw(k), ccw(k), 200.0, 300.0});
    d.detectors.push_back({"DZ" + num(k) + "_enter", "Z" + num(k) + "_enter", 50.0, 300.0});
    d.detectors.push_back({"DZ" + num(k) + "_leave", "Z" + num(k) + "_leave", 50.0, 300.0});
  }
  d.segment_groups.push_back({"QCW", {cw(0), cw(1)}});
  d.segment_groups.push_back({"QCCW", {ccw(1), ccw(0)}});
  std::vector<std::string> ids{"Z0", "Z1", "Z2", "Z3"};
  OdMatrix m(ids);
  const double base[4][4] = {{0, 120, 80, 60}, {100, 0, 140, 70}, {90, 60, 0, 110}, {50, 80, 130, 0}};
  for (int o = 0; o < n; ++o)
    for (int dd = 0; dd < n; ++dd) m(o, dd) = base[o][dd];
  f.offpeak = m;
  f.peak = m.scaled(1.5);
  return f;
}

Fixture fixture_by_name(const std::string& name) {
  if (name == "corridor") return corridor_fixture();
  if (name == "district") return district_fixture();
  if (name == "ring") return ring_fixture();
  throw std::invalid_argument("unknown fixture: " + name);
}

}  // namespace shuttlesim
