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

#include "shuttlesim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "shuttlesim/units.hpp"

namespace shuttlesim::io {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
}

namespace {

// Speeds are stored in m/s; rounding the mph form keeps file round trips
// stable.
double mph_out(double mps) { return std::round(units::to_mph(mps) * 1e9) / 1e9; }

std::string fmt(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

double length_factor(const json& j) {
  const std::string u = j.contains("units") ? get_or<std::string>(j["units"], "length", "m") : "m";
  if (u == "m") return 1.0;
  if (u == "ft") return units::kFootToMeter;
  if (u == "mi") return units::kMileToMeter;
  throw std::invalid_argument("unknown length unit: " + u);
}

double speed_factor(const json& j) {
  const std::string u = j.contains("units") ? get_or<std::string>(j["units"], "speed", "mph") : "mph";
  if (u == "mph") return units::kMphToMps;
  if (u == "mps") return 1.0;
  if (u == "kmh") return units::kKmhToMps;
  throw std::invalid_argument("unknown speed unit: " + u);
}

TurnControl control_from(const std::string& s) {
  for (auto c : {TurnControl::kUncontrolled, TurnControl::kStop, TurnControl::kYield, TurnControl::kSignal})
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown turn control: " + s);
}

}  // namespace

json network_to_json(const NetworkData& d) {
  json j;
  j["units"] = {{"length", "m"}, {"speed", "mph"}, {"time", "s"}};
  j["nodes"] = json::array();
  for (const auto& n : d.nodes) j["nodes"].push_back({{"id", n.id}});
  j["sections"] = json::array();
  for (const auto& s : d.sections)
    j["sections"].push_back({{"id", s.id},
                             {"from", s.from_node},
                             {"to", s.to_node},
                             {"length", s.length_m},
                             {"lanes", s.lane_count},
                             {"speed_limit", mph_out(s.speed_limit_mps)}});
  j["turns"] = json::array();
  for (const auto& t : d.turns) {
    json o = {{"from", t.from_section}, {"to", t.to_section}, {"control", to_string(t.control)}};
    if (t.from_lane >= 0) o["from_lane"] = t.from_lane;
    if (t.to_lane >= 0) o["to_lane"] = t.to_lane;
    if (!t.phase.empty()) o["phase"] = t.phase;
    j["turns"].push_back(o);
  }
  j["signals"] = json::array();
  for (const auto& s : d.signals) {
    json phases = json::array();
    for (const auto& p : s.phases)
      phases.push_back({{"id", p.id}, {"green_start_s", p.green_start_s}, {"green_end_s", p.green_end_s}});
    j["signals"].push_back({{"node", s.node}, {"cycle_s", s.cycle_s}, {"offset_s", s.offset_s}, {"phases", phases}});
  }
  j["detectors"] = json::array();
  for (const auto& x : d.detectors)
    j["detectors"].push_back(
        {{"id", x.id}, {"section", x.section}, {"offset", x.offset_m}, {"aggregation_s", x.aggregation_s}});
  j["centroids"] = json::array();
  for (const auto& c : d.centroids) {
    json conns = json::array();
    for (const auto& k : c.connectors) conns.push_back({{"section", k.section}, {"direction", to_string(k.direction)}});
    j["centroids"].push_back({{"id", c.id}, {"kind", to_string(c.kind)}, {"connectors", conns}});
  }
  j["transit_routes"] = json::array();
  for (const auto& r : d.transit_routes) {
    json stops = json::array();
    for (const auto& s : r.stops)
      stops.push_back({{"section", s.section}, {"offset", s.offset_m}, {"dwell_s", s.dwell_s}});
    j["transit_routes"].push_back({{"id", r.id}, {"sections", r.sections}, {"stops", stops}});
  }
  j["segment_groups"] = json::array();
  for (const auto& g : d.segment_groups) j["segment_groups"].push_back({{"name", g.name}, {"sections", g.sections}});
  return j;
}

NetworkData network_from_json(const json& j) {
  const double lf = length_factor(j);
  const double sf = speed_factor(j);
  NetworkData d;
  auto arr = [&](const char* key) { return j.contains(key) ? j[key] : json::array(); };
  try {
    for (const auto& n : arr("nodes")) d.nodes.push_back({n.at("id").get<std::string>()});
    for (const auto& s : arr("sections"))
      d.sections.push_back({s.at("id").get<std::string>(), s.at("from").get<std::string>(),
                            s.at("to").get<std::string>(), s.at("length").get<double>() * lf,
                            get_or<int>(s, "lanes", 1), s.at("speed_limit").get<double>() * sf});
    for (const auto& t : arr("turns"))
      d.turns.push_back({t.at("from").get<std::string>(), t.at("to").get<std::string>(),
                         get_or<int>(t, "from_lane", -1), get_or<int>(t, "to_lane", -1),
                         control_from(get_or<std::string>(t, "control", "uncontrolled")),
                         get_or<std::string>(t, "phase", "")});
    for (const auto& s : arr("signals")) {
      SignalPlanSpec p{s.at("node").get<std::string>(), s.at("cycle_s").get<double>(),
                       get_or<double>(s, "offset_s", 0.0), {}};
      for (const auto& ph : s.at("phases"))
        p.phases.push_back(
            {ph.at("id").get<std::string>(), ph.at("green_start_s").get<double>(), ph.at("green_end_s").get<double>()});
      d.signals.push_back(std::move(p));
    }
    for (const auto& x : arr("detectors"))
      d.detectors.push_back({x.at("id").get<std::string>(), x.at("section").get<std::string>(),
                             x.at("offset").get<double>() * lf, get_or<double>(x, "aggregation_s", 300.0)});
    for (const auto& c : arr("centroids")) {
      const std::string kind = get_or<std::string>(c, "kind", "internal");
      if (kind != "internal" && kind != "external") throw std::invalid_argument("unknown centroid kind: " + kind);
      CentroidSpec cs{c.at("id").get<std::string>(),
                      kind == "external" ? CentroidKind::kExternal : CentroidKind::kInternal,
                      {}};
      for (const auto& k : c.at("connectors")) {
        const std::string dir = k.at("direction").get<std::string>();
        if (dir != "in" && dir != "out") throw std::invalid_argument("unknown connector direction: " + dir);
        cs.connectors.push_back(
            {k.at("section").get<std::string>(), dir == "in" ? ConnectorDirection::kIn : ConnectorDirection::kOut});
      }
      d.centroids.push_back(std::move(cs));
    }
    for (const auto& r : arr("transit_routes")) {
      TransitRouteSpec rs{r.at("id").get<std::string>(), r.at("sections").get<std::vector<std::string>>(), {}};
      for (const auto& s : get_or<json>(r, "stops", json::array()))
        rs.stops.push_back({s.at("section").get<std::string>(), s.at("offset").get<double>() * lf,
                            get_or<double>(s, "dwell_s", 20.0)});
      d.transit_routes.push_back(std::move(rs));
    }
    for (const auto& g : arr("segment_groups"))
      d.segment_groups.push_back({g.at("name").get<std::string>(), g.at("sections").get<std::vector<std::string>>()});
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed network file: ") + e.what());
  }
  return d;
}

NetworkData load_network(const fs::path& path) {
  try {
    return network_from_json(read_json(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------- parameters

namespace {

json dist_json(const ParamDist& d) { return {{"min", d.min}, {"mean", d.mean}, {"dev", d.deviation}, {"max", d.max}}; }

ParamDist dist_from(const json& j, const ParamDist& fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return ParamDist::fixed(j.get<double>());
  return {j.at("min").get<double>(), j.at("mean").get<double>(), get_or<double>(j, "dev", 0.0),
          j.at("max").get<double>()};
}

json class_json(const VehicleClassParams& p) {
  json j;
  j["length_m"] = p.length_m;
  j["width_m"] = p.width_m;
  j["max_speed_mph"] = std::isfinite(p.max_speed_mps) ? json(mph_out(p.max_speed_mps)) : json(nullptr);
  j["speed_acceptance"] = dist_json(p.speed_acceptance);
  j["clearance_m"] = dist_json(p.clearance_m);
  j["yield_time_s"] = dist_json(p.yield_time_s);
  j["reaction_time_s"] = {
      {"normal", p.reaction_normal_s}, {"at_stop", p.reaction_at_stop_s}, {"at_signal", p.reaction_at_signal_s}};
  j["max_accel_mps2"] = dist_json(p.max_accel);
  j["normal_decel_mps2"] = dist_json(p.normal_decel);
  j["max_decel_mps2"] = dist_json(p.max_decel);
  j["sensitivity"] = dist_json(p.sensitivity);
  j["min_time_gap_s"] = p.min_time_gap_s;
  j["stay_in_overtaking_lane"] = p.stay_in_overtaking_lane;
  j["imprudent_lane_change"] = p.imprudent_lane_change;
  return j;
}

VehicleClassParams class_from(const json& j, VehicleClassParams p) {
  auto field = [&](const char* k) { return j.contains(k) ? j[k] : json(nullptr); };
  p.length_m = get_or<double>(j, "length_m", p.length_m);
  p.width_m = get_or<double>(j, "width_m", p.width_m);
  if (j.contains("max_speed_mph"))
    p.max_speed_mps = j["max_speed_mph"].is_null() ? units::kInfinity : units::mph(j["max_speed_mph"].get<double>());
  p.speed_acceptance = dist_from(field("speed_acceptance"), p.speed_acceptance);
  p.clearance_m = dist_from(field("clearance_m"), p.clearance_m);
  p.yield_time_s = dist_from(field("yield_time_s"), p.yield_time_s);
  if (j.contains("reaction_time_s")) {
    const auto& r = j["reaction_time_s"];
    p.reaction_normal_s = get_or<double>(r, "normal", p.reaction_normal_s);
    p.reaction_at_stop_s = get_or<double>(r, "at_stop", p.reaction_at_stop_s);
    p.reaction_at_signal_s = get_or<double>(r, "at_signal", p.reaction_at_signal_s);
  }
  p.max_accel = dist_from(field("max_accel_mps2"), p.max_accel);
  p.normal_decel = dist_from(field("normal_decel_mps2"), p.normal_decel);
  p.max_decel = dist_from(field("max_decel_mps2"), p.max_decel);
  p.sensitivity = dist_from(field("sensitivity"), p.sensitivity);
  p.min_time_gap_s = get_or<double>(j, "min_time_gap_s", p.min_time_gap_s);
  p.stay_in_overtaking_lane = get_or<bool>(j, "stay_in_overtaking_lane", p.stay_in_overtaking_lane);
  p.imprudent_lane_change = get_or<bool>(j, "imprudent_lane_change", p.imprudent_lane_change);
  p.validate();
  return p;
}

}  // namespace

json params_to_json(const VehicleClassParams& hdv, const VehicleClassParams& shuttle) {
  return {{"units", {{"length", "m"}, {"speed", "mph"}, {"accel", "m/s^2"}, {"time", "s"}}},
          {"hdv", class_json(hdv)},
          {"shuttle", class_json(shuttle)}};
}

std::pair<VehicleClassParams, VehicleClassParams> params_from_json(const json& j) {
  try {
    auto hdv = class_from(j.contains("hdv") ? j["hdv"] : json::object(), VehicleClassParams::hdv());
    auto shuttle = class_from(j.contains("shuttle") ? j["shuttle"] : json::object(), VehicleClassParams::shuttle());
    return {hdv, shuttle};
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed parameter file: ") + e.what());
  }
}

std::pair<VehicleClassParams, VehicleClassParams> load_params(const fs::path& path) {
  try {
    return params_from_json(read_json(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ----------------------------------------------------------------- demand

json od_to_json(const OdMatrix& m) {
  json rows = json::array();
  for (std::size_t o = 0; o < m.size(); ++o) {
    json row = json::array();
    for (std::size_t d = 0; d < m.size(); ++d) row.push_back(m(o, d));
    rows.push_back(row);
  }
  return rows;
}

OdMatrix od_from_json(const std::vector<std::string>& centroids, const json& rows) {
  OdMatrix m(centroids);
  if (!rows.is_array() || rows.size() != centroids.size())
    throw std::invalid_argument("OD matrix needs one row per centroid");
  for (std::size_t o = 0; o < rows.size(); ++o) {
    if (!rows[o].is_array() || rows[o].size() != centroids.size())
      throw std::invalid_argument("OD matrix row " + std::to_string(o) + " has the wrong length");
    for (std::size_t d = 0; d < rows[o].size(); ++d) m(o, d) = rows[o][d].get<double>();
  }
  m.validate();
  return m;
}

json demand_to_json(const DemandFile& d) {
  json j = {{"units", {{"trips", "per hour"}}}, {"centroids", d.offpeak.centroids}, {"off-peak", od_to_json(d.offpeak)}};
  if (d.peak) j["peak"] = od_to_json(*d.peak);
  return j;
}

DemandFile demand_from_json(const json& j) {
  try {
    const auto ids = j.at("centroids").get<std::vector<std::string>>();
    DemandFile d;
    d.offpeak = od_from_json(ids, j.at("off-peak"));
    if (j.contains("peak")) d.peak = od_from_json(ids, j["peak"]);
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed demand file: ") + e.what());
  }
}

DemandFile load_demand(const fs::path& path) {
  try {
    return demand_from_json(read_json(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------- plan

json plan_to_json(const AssignmentPlan& plan, const Network& net) {
  json j;
  j["fixed_fraction"] = plan.fixed_fraction;
  j["model"] = {{"kind", plan.model.kind == ChoiceModelKind::kCLogit ? "c-logit" : "logit"},
                {"scale", plan.model.scale},
                {"beta", plan.model.beta},
                {"gamma", plan.model.gamma}};
  j["intervals"] = json::array();
  for (const auto& iv : plan.intervals) {
    json ods = json::array();
    for (const auto& od : iv.ods) {
      json paths = json::array();
      for (std::size_t p = 0; p < od.paths.size(); ++p) {
        std::vector<std::string> ids;
        for (Index s : od.paths[p].sections) ids.push_back(net.section(s).id);
        paths.push_back({{"index", p}, {"sections", ids}, {"cost_s", od.paths[p].cost}, {"share", od.shares[p]}});
      }
      ods.push_back({{"origin", od.origin}, {"destination", od.destination}, {"paths", paths}});
    }
    j["intervals"].push_back({{"start_s", iv.start_s}, {"duration_s", iv.duration_s}, {"ods", ods}});
  }
  return j;
}

AssignmentPlan plan_from_json(const json& j, const Network& net) {
  AssignmentPlan plan;
  try {
    plan.fixed_fraction = get_or<double>(j, "fixed_fraction", plan.fixed_fraction);
    if (j.contains("model")) {
      const auto& m = j["model"];
      const std::string kind = get_or<std::string>(m, "kind", "logit");
      if (kind != "logit" && kind != "c-logit") throw std::invalid_argument("unknown choice model: " + kind);
      plan.model = kind == "c-logit" ? ChoiceModel::clogit(get_or<double>(m, "scale", 12.0),
                                                           get_or<double>(m, "beta", 0.1),
                                                           get_or<double>(m, "gamma", 1.0))
                                     : ChoiceModel::logit(get_or<double>(m, "scale", 12.0));
    }
    for (const auto& iv : j.at("intervals")) {
      IntervalPlan ip{iv.at("start_s").get<double>(), iv.at("duration_s").get<double>(), {}};
      for (const auto& od : iv.at("ods")) {
        OdPlan op{od.at("origin").get<std::string>(), od.at("destination").get<std::string>(), {}, {}};
        for (const auto& p : od.at("paths")) {
          Path path;
          for (const auto& id : p.at("sections")) {
            const Index s = net.section_index(id.get<std::string>());
            path.sections.push_back(s);
            path.length_m += net.section(s).length_m;
          }
          path.cost = get_or<double>(p, "cost_s", 0.0);
          op.paths.push_back(std::move(path));
          op.shares.push_back(p.at("share").get<double>());
        }
        ip.ods.push_back(std::move(op));
      }
      plan.intervals.push_back(std::move(ip));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed plan file: ") + e.what());
  }
  plan.validate();
  return plan;
}

// ---------------------------------------------------------------- outputs

std::string trajectories_csv(const SimOutput& out, const Network& net) {
  std::string s = "t_s,vehicle_id,class,section_id,offset_m,speed_mps,excluded\n";
  for (const auto& t : out.trajectories) {
    s += fmt(t.t_s, 1) + ',' + std::to_string(t.vehicle) + ',' + std::string(to_string(t.cls)) + ',' +
         net.section(t.section).id + ',' + fmt(t.offset_m, 3) + ',' + fmt(t.speed_mps, 3) + ',' +
         (t.excluded ? "1" : "0") + '\n';
  }
  return s;
}

std::string detector_counts_csv(const SimOutput& out, const Network& net) {
  std::string s = "detector_id,bin_start_s,count\n";
  for (const auto& c : out.detector_counts)
    s += net.detectors()[c.detector].id + ',' + fmt(c.bin_start_s, 1) + ',' + std::to_string(c.count) + '\n';
  return s;
}

std::string traversals_csv(const SimOutput& out, const Network& net) {
  std::string s = "vehicle_id,class,group,entry_s,exit_s,distance_m,ideal_s,excluded_s,travel_time_s\n";
  for (const auto& t : out.traversals) {
    s += std::to_string(t.vehicle) + ',' + std::string(to_string(t.cls)) + ',' + net.segment_groups()[t.group].name +
         ',' + fmt(t.entry_s, 2) + ',' + fmt(t.exit_s, 2) + ',' + fmt(t.distance_m, 2) + ',' + fmt(t.ideal_s, 3) +
         ',' + fmt(t.excluded_s, 2) + ',' + fmt(t.travel_time_s(), 3) + '\n';
  }
  return s;
}

std::string vehicles_csv(const SimOutput& out) {
  std::string s = "vehicle_id,class,tag,origin,destination,route,release_s,entry_s,exit_s,distance_m,ideal_s\n";
  for (const auto& v : out.vehicles) {
    s += std::to_string(v.id) + ',' + std::string(to_string(v.cls)) + ',' + v.tag + ',' + v.origin + ',' +
         v.destination + ',' + v.route + ',' + fmt(v.release_s, 2) + ',' + fmt(v.entry_s, 2) + ',' +
         fmt(v.exit_s, 2) + ',' + fmt(v.distance_m, 2) + ',' + fmt(v.ideal_s, 3) + '\n';
  }
  return s;
}

// ---------------------------------------------------------- trajectory logs

namespace {

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

}  // namespace

std::string trajectory_logs_text(const std::vector<TrajectoryLog>& logs) {
  std::string s;
  for (const auto& log : logs) {
    s += "# trip: " + log.trip + '\n';
    s += "# class: " + std::string(to_string(log.cls)) + '\n';
    s += "# condition: " + std::string(to_string(log.condition)) + '\n';
    if (!log.route.empty()) s += "# route: " + log.route + '\n';
    s += "t_s,section_id,offset_m,speed_mps,excluded\n";
    for (const auto& p : log.samples)
      s += fmt(p.t_s, 1) + ',' + p.section + ',' + fmt(p.offset_m, 3) + ',' + fmt(p.speed_mps, 3) + ',' +
           (p.excluded ? "1" : "0") + '\n';
  }
  return s;
}

std::vector<TrajectoryLog> parse_trajectory_logs(const std::string& text) {
  std::vector<TrajectoryLog> logs;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  bool have_class = false;
  while (std::getline(ss, line)) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(line.substr(1, colon - 1));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "trip") {
        logs.emplace_back();
        logs.back().trip = value;
        have_class = false;
      } else if (logs.empty()) {
        throw std::invalid_argument("line " + std::to_string(n) + ": header before '# trip:'");
      } else if (key == "class") {
        logs.back().cls = vehicle_class_from_string(value);
        have_class = true;
      } else if (key == "condition") {
        logs.back().condition = condition_from_string(value);
        if (!have_class)
          logs.back().cls = logs.back().condition == Condition::kShuttle ? VehicleClass::kShuttle : VehicleClass::kHdv;
      } else if (key == "route") {
        logs.back().route = value;
      }
      continue;
    }
    if (line.rfind("t_s", 0) == 0) continue;
    if (logs.empty()) throw std::invalid_argument("line " + std::to_string(n) + ": sample before '# trip:'");
    const auto cells = split_csv(line);
    if (cells.size() < 4 || cells.size() > 5)
      throw std::invalid_argument("line " + std::to_string(n) + ": expected 4 or 5 columns");
    logs.back().samples.push_back({to_double(cells[0], n), cells[1], to_double(cells[2], n), to_double(cells[3], n),
                                   cells.size() == 5 && cells[4] == "1"});
  }
  for (const auto& log : logs) log.validate();
  return logs;
}

std::vector<TrajectoryLog> load_trajectory_logs(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<TrajectoryLog> logs;
  for (const auto& f : files) {
    try {
      auto part = parse_trajectory_logs(read_file(f));
      logs.insert(logs.end(), part.begin(), part.end());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(f.string() + ": " + e.what());
    }
  }
  return logs;
}

// -------------------------------------------------------------- detectors

std::vector<DetectorObservation> parse_detector_observations(const std::string& text) {
  std::vector<DetectorObservation> out;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("detector_id", 0) == 0) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw std::invalid_argument("line " + std::to_string(n) + ": expected 3 columns");
    const double count = to_double(cells[2], n);
    if (count < 0.0) throw std::invalid_argument("line " + std::to_string(n) + ": negative count");
    out.push_back({cells[0], to_double(cells[1], n), count});
  }
  return out;
}

std::vector<DetectorObservation> load_detector_observations(const fs::path& path) {
  try {
    return parse_detector_observations(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string detector_observations_csv(const std::vector<DetectorObservation>& obs) {
  std::string s = "detector_id,bin_start_s,count\n";
  for (const auto& o : obs) s += o.detector + ',' + fmt(o.bin_start_s, 1) + ',' + fmt(o.count, 3) + '\n';
  return s;
}

std::vector<std::pair<std::string, double>> hourly_flows(const std::vector<DetectorObservation>& obs, double bin_s) {
  std::vector<std::pair<std::string, double>> out;
  std::vector<int> bins;
  for (const auto& o : obs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == o.detector; });
    if (it == out.end()) {
      out.emplace_back(o.detector, 0.0);
      bins.push_back(0);
      it = out.end() - 1;
    }
    it->second += o.count;
    ++bins[it - out.begin()];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].second *= 3600.0 / (bins[i] * bin_s);
  return out;
}

// ------------------------------------------------------------- provenance

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string provenance_header(const Provenance& p, const std::string& prefix) {
  std::string s = prefix + "generator: shuttlesim " + SHUTTLESIM_VERSION + '\n';
  s += prefix + "command: " + p.command + '\n';
  s += prefix + "seed: " + std::to_string(p.seed) + '\n';
  for (const auto& [label, hash] : p.inputs) s += prefix + "input " + label + ": fnv1a64 " + hash + '\n';
  return s;
}

json provenance_json(const Provenance& p) {
  json inputs = json::object();
  for (const auto& [label, hash] : p.inputs) inputs[label] = "fnv1a64:" + hash;
  return {{"generator", std::string("shuttlesim ") + SHUTTLESIM_VERSION},
          {"command", p.command},
          {"seed", p.seed},
          {"inputs", inputs}};
}

}  // namespace shuttlesim::io
