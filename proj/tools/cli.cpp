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

#include "shuttlesim/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "shuttlesim/calibration.hpp"
#include "shuttlesim/experiments.hpp"
#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/io.hpp"
#include "shuttlesim/units.hpp"

namespace shuttlesim {
namespace {

using io::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flag values; a flag is set when its option was given.
struct Flags {
  std::string manifest, network, fixture, params, demand, plan, trajectories, detectors, out_dir;
  std::string period = "off-peak", scenarios, periods, route, stage, input, format = "md", name;
  std::uint64_t seed = 1;
  int replications = 1;
  double headway = 0.0, shuttle_speed = 0.0, duration = 0.0, warmup = 0.0, epsilon = 1.5;
  unsigned threads = 0;
  bool tune_s4 = false;
  std::map<std::string, std::vector<CLI::Option*>> given;

  bool has(const std::string& key) const {
    auto it = given.find(key);
    if (it == given.end()) return false;
    for (const auto* o : it->second)
      if (o->count() > 0) return true;
    return false;
  }
};

/// Inputs resolved from the manifest and flags; flags win.
struct Context {
  json manifest = json::object();
  fs::path base;
  NetworkData data;
  std::optional<Network> net;
  VehicleClassParams hdv = VehicleClassParams::hdv();
  VehicleClassParams shuttle = VehicleClassParams::shuttle();
  std::optional<io::DemandFile> demand;
  std::vector<std::string> shuttle_routes;
  io::Provenance prov;
  fs::path out_dir;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

std::string hash_of(const std::string& bytes) { return io::hex64(io::fnv1a(bytes)); }

/// A path from a flag (cwd relative) or the manifest (manifest relative).
std::optional<fs::path> input_path(const Context& c, const Flags& f, const std::string& flag, const std::string& value,
                                   const char* key) {
  if (f.has(flag)) return fs::path(value);
  if (c.manifest.contains(key) && c.manifest[key].is_string()) {
    fs::path p = c.manifest[key].get<std::string>();
    return p.is_absolute() ? p : c.base / p;
  }
  return std::nullopt;
}

template <typename T>
T setting(const Context& c, const Flags& f, const std::string& flag, const T& flag_value, const char* key,
          const T& fallback) {
  if (f.has(flag)) return flag_value;
  if (c.manifest.contains(key) && !c.manifest[key].is_null()) return c.manifest[key].get<T>();
  return fallback;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Context load_context(const Flags& f, const std::string& command) {
  Context c;
  c.prov.command = command;
  if (!f.manifest.empty()) {
    c.manifest = io::read_json(f.manifest);
    c.base = fs::path(f.manifest).parent_path();
    c.prov.inputs.emplace_back("manifest", hash_of(io::read_file(f.manifest)));
  }
  const auto net_path = input_path(c, f, "network", f.network, "network");
  const std::string fixture = setting<std::string>(c, f, "fixture", f.fixture, "fixture", "");
  std::optional<Fixture> fx;
  if (net_path) {
    const std::string text = io::read_file(*net_path);
    c.data = io::load_network(*net_path);
    c.prov.inputs.emplace_back("network", hash_of(text));
  } else if (!fixture.empty()) {
    fx = fixture_by_name(fixture);
    c.data = fx->network;
    c.prov.inputs.emplace_back("fixture:" + fixture, hash_of(io::network_to_json(c.data).dump()));
  } else {
    throw UsageError("no network: pass --network, --fixture or a manifest naming one");
  }
  c.net = Network::build(c.data);

  if (const auto p = input_path(c, f, "params", f.params, "params")) {
    std::tie(c.hdv, c.shuttle) = io::load_params(*p);
    c.prov.inputs.emplace_back("params", hash_of(io::read_file(*p)));
  }
  if (const auto p = input_path(c, f, "demand", f.demand, "demand")) {
    c.demand = io::load_demand(*p);
    c.prov.inputs.emplace_back("demand", hash_of(io::read_file(*p)));
  } else if (fx) {
    c.demand = io::DemandFile{fx->offpeak, fx->peak};
  }
  if (c.manifest.contains("shuttle_routes")) {
    c.shuttle_routes = c.manifest["shuttle_routes"].get<std::vector<std::string>>();
  } else if (fx) {
    c.shuttle_routes = fx->shuttle_routes;
  } else {
    for (const auto& r : c.net->transit_routes()) c.shuttle_routes.push_back(r.id);
  }
  c.seed = setting<std::uint64_t>(c, f, "seed", f.seed, "seed", 1);
  c.threads = setting<unsigned>(c, f, "threads", f.threads, "threads", 0);
  c.prov.seed = c.seed;

  std::string out = f.has("out") ? f.out_dir : "";
  if (out.empty() && c.manifest.contains("output_dir")) {
    fs::path p = c.manifest["output_dir"].get<std::string>();
    out = (p.is_absolute() ? p : c.base / p).string();
  }
  if (out.empty()) {
    const char* env = std::getenv("SHUTTLESIM_OUT_DIR");
    out = env && *env ? env : "shuttlesim-out";
  }
  c.out_dir = out;
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec || !fs::is_directory(c.out_dir))
    throw std::runtime_error("output directory not writable: " + c.out_dir.string());
  return c;
}

SimConfig sim_config(const Context& c, const Flags& f) {
  SimConfig cfg;
  if (c.manifest.contains("simulation")) {
    const auto& s = c.manifest["simulation"];
    cfg.step_s = s.value("step_s", cfg.step_s);
    cfg.duration_s = s.value("duration_s", cfg.duration_s);
    cfg.warmup_s = s.value("warmup_s", cfg.warmup_s);
    cfg.sample_interval_s = s.value("sample_interval_s", cfg.sample_interval_s);
    cfg.courtesy.enabled = s.value("courtesy", cfg.courtesy.enabled);
  }
  if (f.has("duration")) cfg.duration_s = f.duration;
  if (f.has("warmup")) cfg.warmup_s = f.warmup;
  cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

ExperimentSetup experiment_setup(const Context& c, const Flags& f) {
  if (!c.demand) throw UsageError("no demand: pass --demand or a manifest naming one");
  ExperimentSetup s;
  s.net = &*c.net;
  s.hdv = c.hdv;
  s.shuttle = c.shuttle;
  s.offpeak = c.demand->offpeak;
  s.peak = c.demand->peak ? *c.demand->peak : c.demand->offpeak;
  s.shuttle_routes = c.shuttle_routes;
  s.config = sim_config(c, f);
  return s;
}

std::string csv_with_header(const Context& c, const std::string& body) { return io::provenance_header(c.prov) + body; }

void write_json(const fs::path& path, json j, const Context& c) {
  j["provenance"] = io::provenance_json(c.prov);
  io::write_file(path, j.dump(2) + "\n");
}

// ------------------------------------------------------------- simulate

int cmd_simulate(const Flags& f, std::ostream& out) {
  Context c = load_context(f, "simulate");
  ExperimentSetup setup = experiment_setup(c, f);
  const Period period = period_from_string(setting<std::string>(c, f, "period", f.period, "period", "off-peak"));
  Scenario scenario{"simulate", std::nullopt, std::nullopt};
  json shuttle_cfg = c.manifest.value("shuttle", json::object());
  if (f.has("headway")) scenario.headway_min = f.headway;
  else if (shuttle_cfg.contains("headway_min")) scenario.headway_min = shuttle_cfg["headway_min"].get<double>();
  if (f.has("shuttle-speed")) scenario.speed_mph = f.shuttle_speed;
  else if (shuttle_cfg.contains("speed_mph")) scenario.speed_mph = shuttle_cfg["speed_mph"].get<double>();
  scenario.validate();

  AssignmentPlan plan;
  if (const auto p = input_path(c, f, "plan", f.plan, "plan")) {
    plan = io::plan_from_json(io::read_json(*p), *c.net);
    c.prov.inputs.emplace_back("plan", hash_of(io::read_file(*p)));
  } else {
    plan = period_plan(setup, period);
  }

  SimInputs in;
  in.hdv = setup.hdv;
  in.shuttle = setup.shuttle;
  in.plan = plan;
  in.demand = DemandProfile::uniform(setup.demand(period), setup.config.horizon_s());
  if (scenario.headway_min) {
    std::optional<double> cap;
    if (scenario.speed_mph) cap = units::mph(*scenario.speed_mph);
    for (const auto& r : setup.shuttle_routes) in.shuttles.push_back({r, *scenario.headway_min, cap});
  }
  const SimOutput result = run(*c.net, in, setup.config);

  io::write_file(c.out_dir / "trajectories.csv", csv_with_header(c, io::trajectories_csv(result, *c.net)));
  io::write_file(c.out_dir / "detector_counts.csv", csv_with_header(c, io::detector_counts_csv(result, *c.net)));
  io::write_file(c.out_dir / "traversals.csv", csv_with_header(c, io::traversals_csv(result, *c.net)));
  io::write_file(c.out_dir / "vehicles.csv", csv_with_header(c, io::vehicles_csv(result)));
  write_json(c.out_dir / "plan.json", io::plan_to_json(plan, *c.net), c);
  const auto& s = result.stats;
  json summary = {{"period", to_string(period)},
                  {"measure_start_s", result.measure_start_s},
                  {"measure_end_s", result.measure_end_s},
                  {"released", s.released},
                  {"entered", s.entered},
                  {"exited", s.exited},
                  {"in_network", s.in_network},
                  {"queued", s.queued},
                  {"guard_activations", s.guard_activations},
                  {"speed_violations", s.speed_violations},
                  {"lane_changes", s.lane_changes},
                  {"delay_ratio_pct", delay_ratio(result.traversals).value_or(0.0)},
                  {"weighted_speed_mph", weighted_speed(result.traversals).value_or(0.0)}};
  write_json(c.out_dir / "summary.json", summary, c);
  out << "simulate: " << s.entered << " vehicles entered, " << s.exited << " exited; outputs in "
      << c.out_dir.string() << '\n';
  return kExitOk;
}

// ------------------------------------------------------------ calibrate

CalibrationDesign design_for(const Context& c, const Flags& f) {
  json cal = c.manifest.value("calibration", json::object());
  std::string route = f.has("route") ? f.route : cal.value("route", std::string());
  if (route.empty()) {
    if (c.shuttle_routes.empty()) throw UsageError("no shuttle route to calibrate on: pass --route");
    route = c.shuttle_routes.front();
  }
  CalibrationDesign d = route_design(*c.net, route);
  d.trips = cal.value("trips", d.trips);
  d.spacing_s = cal.value("spacing_s", d.spacing_s);
  d.shuttle_delay_s = cal.value("shuttle_delay_s", d.shuttle_delay_s);
  d.follower_gap_s = cal.value("follower_gap_s", d.follower_gap_s);
  d.entry_speed_mps = cal.value("entry_speed_mps", d.entry_speed_mps);
  return d;
}

ParamGrid grid_for(const Context& c) {
  ParamGrid g;
  if (c.manifest.contains("grid")) {
    for (const auto& a : c.manifest["grid"])
      g.axes.push_back({a.at("field").get<std::string>(), a.at("values").get<std::vector<double>>()});
  } else {
    g.axes = {{"hdv.max_accel", {3.0, 4.0, 5.0}}, {"hdv.speed_acceptance", {0.9, 1.0, 1.1}}};
  }
  g.validate();
  return g;
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

json nan_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

int cmd_calibrate_vehicles(const Flags& f, std::ostream& out) {
  Context c = load_context(f, "calibrate vehicles");
  const auto path = input_path(c, f, "trajectories", f.trajectories, "trajectories");
  if (!path) throw UsageError("vehicles stage needs trajectory logs: pass --trajectories");
  const auto logs = io::load_trajectory_logs(*path);
  c.prov.inputs.emplace_back("trajectories", hash_of(io::trajectory_logs_text(logs)));
  const CalibrationDesign design = design_for(c, f);
  const ParamGrid grid = grid_for(c);
  const int reps = setting<int>(c, f, "replications", f.replications, "replications", 1);
  const SegmentTimes observed = segment_travel_times(logs, *c.net, design.segments);
  const GridResult r = grid_search_vehicle_params(grid, *c.net, observed, design, c.hdv, c.shuttle, reps, c.seed,
                                                  c.threads);

  write_json(c.out_dir / "best_params.json", io::params_to_json(r.hdv, r.shuttle), c);
  std::string csv = "index";
  for (const auto& a : grid.axes) csv += ',' + a.field;
  csv += ",ok,mape_free,mape_following,mape_shuttle,calibration_mape,error\n";
  for (const auto& s : r.table) {
    csv += std::to_string(s.index);
    for (double v : s.values) csv += ',' + fmt_num(v);
    csv += std::string(",") + (s.ok ? "1" : "0") + ',' + fmt_num(s.mape_free) + ',' + fmt_num(s.mape_following) +
           ',' + fmt_num(s.mape_shuttle) + ',' + fmt_num(s.calibration_mape) + ',' + s.error + '\n';
  }
  io::write_file(c.out_dir / "grid_scores.csv", csv_with_header(c, csv));

  const GridScore& best = r.table[r.best];
  json values = json::object();
  for (std::size_t k = 0; k < grid.axes.size(); ++k) values[grid.axes[k].field] = best.values[k];
  json report = {{"best_index", r.best},
                 {"best_values", values},
                 {"mape_pct",
                  {{"free", nan_null(best.mape_free)},
                   {"following-shuttle", nan_null(best.mape_following)},
                   {"shuttle", nan_null(best.mape_shuttle)},
                   {"calibration", best.calibration_mape}}},
                 {"observed_segments", observed.observations.size()},
                 {"grid_points", r.table.size()}};
  write_json(c.out_dir / "calibration_report.json", report, c);
  out << "calibrate vehicles: best point " << r.best << " calibration MAPE " << fmt_num(best.calibration_mape)
      << "%\n";
  return kExitOk;
}

int cmd_calibrate_demand(const Flags& f, std::ostream& out) {
  Context c = load_context(f, "calibrate demand");
  const auto path = input_path(c, f, "detectors", f.detectors, "detectors");
  if (!path) throw UsageError("demand stage needs detector observations: pass --detectors");
  const auto obs = io::load_detector_observations(*path);
  c.prov.inputs.emplace_back("detectors", hash_of(io::read_file(*path)));
  ExperimentSetup setup = experiment_setup(c, f);
  const Period period = period_from_string(setting<std::string>(c, f, "period", f.period, "period", "off-peak"));
  const AssignmentPlan plan = period_plan(setup, period);

  std::vector<Index> detectors;
  std::vector<double> observed;
  for (const auto& [id, flow] : io::hourly_flows(obs)) {
    const auto d = c.net->find_detector(id);
    if (!d) throw NetworkError("unknown detector in observations", id);
    detectors.push_back(*d);
    observed.push_back(flow);
  }
  OdAdjustOptions opt;
  json od = c.manifest.value("od_adjust", json::object());
  opt.bound = od.value("bound", opt.bound);
  opt.iterations = od.value("iterations", opt.iterations);
  opt.penalty = od.value("penalty", opt.penalty);
  opt.seed = c.seed;
  const auto evaluate = assignment_count_evaluator(*c.net, plan, detectors);
  const OdAdjustResult r = adjust_od(setup.demand(period), observed, evaluate, opt);

  io::DemandFile adjusted = *c.demand;
  if (period == Period::kPeak) adjusted.peak = r.matrix;
  else adjusted.offpeak = r.matrix;
  write_json(c.out_dir / "adjusted_demand.json", io::demand_to_json(adjusted), c);

  const auto before = evaluate(setup.demand(period));
  const auto after = evaluate(r.matrix);
  std::string csv = "detector_id,observed_vph,before_vph,after_vph,geh_before,geh_after\n";
  for (std::size_t k = 0; k < detectors.size(); ++k)
    csv += c.net->detectors()[detectors[k]].id + ',' + fmt_num(observed[k]) + ',' + fmt_num(before[k]) + ',' +
           fmt_num(after[k]) + ',' + fmt_num(r.before.values[k]) + ',' + fmt_num(r.after.values[k]) + '\n';
  io::write_file(c.out_dir / "geh_detail.csv", csv_with_header(c, csv));
  json summary = {{"period", to_string(period)},
                  {"detectors", detectors.size()},
                  {"geh_below_5", {{"before", r.before.below5}, {"after", r.after.below5}}},
                  {"geh_below_10", {{"before", r.before.below10}, {"after", r.after.below10}}},
                  {"sum_geh_squared", {{"before", r.before.sum_squares}, {"after", r.after.sum_squares}}},
                  {"accepted_steps", r.accepted},
                  {"improved", r.improved},
                  {"diagnostics", r.diagnostics},
                  {"objective", r.objective}};
  write_json(c.out_dir / "geh_summary.json", summary, c);
  out << "calibrate demand: GEH<5 " << fmt_num(100.0 * r.before.below5) << "% -> " << fmt_num(100.0 * r.after.below5)
      << "%\n";
  return kExitOk;
}

// ------------------------------------------------------------ scenarios

json metrics_json(const GroupMetrics& m) {
  return {{"ratio_pct", m.ratio ? json(*m.ratio) : json(nullptr)},
          {"speed_mph", m.speed_mph ? json(*m.speed_mph) : json(nullptr)},
          {"traversals", m.traversals}};
}

GroupMetrics metrics_from(const json& j) {
  GroupMetrics m;
  if (!j.at("ratio_pct").is_null()) m.ratio = j["ratio_pct"].get<double>();
  if (!j.at("speed_mph").is_null()) m.speed_mph = j["speed_mph"].get<double>();
  m.traversals = j.at("traversals").get<std::size_t>();
  return m;
}

json cell_json(const CellResult& c) {
  json groups = json::array(), reps = json::array();
  for (const auto& g : c.groups) groups.push_back(metrics_json(g));
  for (const auto& r : c.replications) {
    json rg = json::array();
    for (const auto& g : r.groups) rg.push_back(metrics_json(g));
    reps.push_back({{"seed", r.seed}, {"groups", rg}, {"aggregated", metrics_json(r.aggregated)}});
  }
  return {{"scenario", c.scenario},
          {"period", to_string(c.period)},
          {"shuttle_speed_mph", c.shuttle_speed_mph ? json(*c.shuttle_speed_mph) : json(nullptr)},
          {"groups", groups},
          {"aggregated", metrics_json(c.aggregated)},
          {"replications", reps}};
}

CellResult cell_from(const json& j) {
  CellResult c;
  c.scenario = j.at("scenario").get<std::string>();
  c.period = period_from_string(j.at("period").get<std::string>());
  if (!j.at("shuttle_speed_mph").is_null()) c.shuttle_speed_mph = j["shuttle_speed_mph"].get<double>();
  for (const auto& g : j.at("groups")) c.groups.push_back(metrics_from(g));
  c.aggregated = metrics_from(j.at("aggregated"));
  for (const auto& r : j.at("replications")) {
    ReplicationMetrics m;
    m.seed = r.at("seed").get<std::uint64_t>();
    for (const auto& g : r.at("groups")) m.groups.push_back(metrics_from(g));
    m.aggregated = metrics_from(r.at("aggregated"));
    c.replications.push_back(std::move(m));
  }
  return c;
}

json report_json(const MetricsReport& r) {
  json cells = json::array(), tuning = json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  for (const auto& t : r.tuning) {
    json attempts = json::array();
    for (const auto& [speed, ratio] : t.attempts) attempts.push_back({{"speed_mph", speed}, {"ratio_pct", ratio}});
    tuning.push_back({{"period", to_string(t.period)},
                      {"target_ratio_pct", t.target_ratio},
                      {"speed_mph", t.speed_mph},
                      {"ratio_pct", t.ratio},
                      {"within_epsilon", t.within},
                      {"attempts", attempts}});
  }
  return {{"groups", r.groups}, {"cells", cells}, {"tuning", tuning}};
}

MetricsReport report_from(const json& j) {
  MetricsReport r;
  try {
    r.groups = j.at("groups").get<std::vector<std::string>>();
    for (const auto& c : j.at("cells")) r.cells.push_back(cell_from(c));
    for (const auto& t : j.value("tuning", json::array())) {
      TuningResult tr;
      tr.period = period_from_string(t.at("period").get<std::string>());
      tr.target_ratio = t.at("target_ratio_pct").get<double>();
      tr.speed_mph = t.at("speed_mph").get<double>();
      tr.ratio = t.at("ratio_pct").get<double>();
      tr.within = t.at("within_epsilon").get<bool>();
      for (const auto& a : t.at("attempts"))
        tr.attempts.emplace_back(a.at("speed_mph").get<double>(), a.at("ratio_pct").get<double>());
      r.tuning.push_back(std::move(tr));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
  return r;
}

int cmd_scenarios(const Flags& f, std::ostream& out) {
  Context c = load_context(f, "scenarios");
  ExperimentSetup setup = experiment_setup(c, f);
  std::vector<std::string> ids;
  if (f.has("scenarios")) ids = split_list(f.scenarios);
  else if (c.manifest.contains("scenarios")) ids = c.manifest["scenarios"].get<std::vector<std::string>>();
  else ids = {"S0", "S1", "S2", "S3", "S4"};
  std::vector<std::string> period_ids;
  if (f.has("periods")) period_ids = split_list(f.periods);
  else if (c.manifest.contains("periods")) period_ids = c.manifest["periods"].get<std::vector<std::string>>();
  else period_ids = {"off-peak", "peak"};
  std::vector<Scenario> scenarios;
  for (const auto& id : ids) scenarios.push_back(scenario_by_id(id));
  std::vector<Period> periods;
  for (const auto& p : period_ids) periods.push_back(period_from_string(p));
  const int reps = setting<int>(c, f, "replications", f.replications, "replications", 1);
  const bool tune = f.tune_s4 || c.manifest.value("tune_s4", false);
  TuneOptions topt;
  topt.epsilon = setting<double>(c, f, "epsilon", f.epsilon, "epsilon", 1.5);

  MetricsReport report = run_matrix(setup, scenarios, periods, reps, c.seed, c.threads);
  if (tune) {
    for (Period p : periods) {
      const CellResult* s0 = report.find("S0", p);
      std::optional<double> target;
      if (s0) target = s0->aggregated.ratio;
      else target = run_matrix(setup, {scenario_by_id("S0")}, {p}, reps, c.seed, c.threads).cells[0].aggregated.ratio;
      if (!target) throw std::runtime_error("S0 produced no traversals; cannot tune");
      TuningResult t = tune_shuttle_speed(setup, p, *target, topt, reps, c.seed, c.threads);
      t.cell.scenario = "S4";
      bool replaced = false;
      for (auto& cell : report.cells) {
        if (cell.scenario == "S4" && cell.period == p) {
          cell = t.cell;
          replaced = true;
        }
      }
      if (!replaced) report.cells.push_back(t.cell);
      report.tuning.push_back(std::move(t));
    }
  }
  io::write_file(c.out_dir / "report.md",
                 "<!--\n" + io::provenance_header(c.prov, "") + "-->\n" + format_report_table(report));
  io::write_file(c.out_dir / "report_raw.csv", csv_with_header(c, format_report_csv(report)));
  write_json(c.out_dir / "report.json", report_json(report), c);
  out << format_report_table(report);
  return kExitOk;
}

int cmd_report(const Flags& f, std::ostream& out) {
  if (f.input.empty()) throw UsageError("report needs --input report.json");
  const MetricsReport r = report_from(io::read_json(f.input));
  const std::string text = f.format == "csv" ? format_report_csv(r) : format_report_table(r);
  if (f.has("out")) io::write_file(f.out_dir, text);
  else out << text;
  return kExitOk;
}

// -------------------------------------------------------------- fixture

int cmd_fixture(const Flags& f, std::ostream& out) {
  const Fixture fx = fixture_by_name(f.name);
  fs::path dir = f.has("out") ? fs::path(f.out_dir) : fs::path("fixture-" + f.name);
  fs::create_directories(dir);
  const Network net = Network::build(fx.network);
  io::write_file(dir / "network.json", io::network_to_json(fx.network).dump(2) + "\n");
  io::write_file(dir / "demand.json", io::demand_to_json({fx.offpeak, fx.peak}).dump(2) + "\n");
  const auto hdv = VehicleClassParams::hdv();
  const auto shuttle = VehicleClassParams::shuttle();
  io::write_file(dir / "params.json", io::params_to_json(hdv, shuttle).dump(2) + "\n");

  json manifest = {{"network", "network.json"},
                   {"demand", "demand.json"},
                   {"params", "params.json"},
                   {"seed", f.seed},
                   {"replications", 1},
                   {"output_dir", "out"},
                   {"shuttle_routes", fx.shuttle_routes}};
  if (!fx.shuttle_routes.empty()) {
    const CalibrationDesign d = route_design(net, fx.shuttle_routes.front());
    const auto logs = simulate_conditions(net, hdv, shuttle, d, f.seed);
    io::write_file(dir / "trajectories.txt", io::trajectory_logs_text(logs));
    manifest["trajectories"] = "trajectories.txt";
    manifest["calibration"] = {{"route", fx.shuttle_routes.front()}};
    manifest["grid"] = json::array({{{"field", "hdv.max_accel"}, {"values", {3.0, 4.0, 5.0}}},
                                    {{"field", "hdv.speed_acceptance"}, {"values", {0.9, 1.0, 1.1}}}});
  }
  if (!net.detectors().empty()) {
    SimInputs in;
    SimConfig cfg;
    cfg.seed = f.seed;
    cfg.record_trajectories = false;
    in.demand = DemandProfile::uniform(fx.offpeak, cfg.horizon_s());
    const auto sim = run(net, in, cfg);
    std::vector<io::DetectorObservation> obs;
    for (const auto& dc : sim.detector_counts)
      obs.push_back({net.detectors()[dc.detector].id, dc.bin_start_s, static_cast<double>(dc.count)});
    io::write_file(dir / "detectors.csv", io::detector_observations_csv(obs));
    manifest["detectors"] = "detectors.csv";
  }
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "fixture " << fx.name << " written to " << dir.string() << '\n';
  return kExitOk;
}

std::string error_record(const std::string& kind, const std::string& message, int code) {
  return json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Microscopic simulation of mixed shuttle and car traffic", "shuttlesim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SHUTTLESIM_VERSION));
  Flags f;

  auto common = [&](CLI::App* sub) {
    f.given["manifest"].push_back(sub->add_option("--manifest,-m", f.manifest, "JSON run manifest")->check(CLI::ExistingFile));
    f.given["network"].push_back(sub->add_option("--network", f.network, "network file"));
    f.given["fixture"].push_back(sub->add_option("--fixture", f.fixture, "built-in fixture instead of a network file"));
    f.given["params"].push_back(sub->add_option("--params", f.params, "vehicle-class parameter file"));
    f.given["demand"].push_back(sub->add_option("--demand", f.demand, "demand file"));
    f.given["seed"].push_back(sub->add_option("--seed", f.seed, "base random seed"));
    f.given["threads"].push_back(sub->add_option("--threads", f.threads, "worker threads (0: hardware)"));
    f.given["out"].push_back(sub->add_option("--out,-o", f.out_dir, "output directory"));
  };

  auto* sim = app.add_subcommand("simulate", "run one simulation and write trajectories, counts and traversals");
  common(sim);
  f.given["plan"].push_back(sim->add_option("--plan", f.plan, "assignment plan file"));
  f.given["period"].push_back(sim->add_option("--period", f.period, "off-peak or peak"));
  f.given["headway"].push_back(sim->add_option("--headway", f.headway, "shuttle headway in minutes"));
  f.given["shuttle-speed"].push_back(sim->add_option("--shuttle-speed", f.shuttle_speed, "shuttle speed cap in mph"));
  f.given["duration"].push_back(sim->add_option("--duration", f.duration, "measured duration in seconds"));
  f.given["warmup"].push_back(sim->add_option("--warmup", f.warmup, "warm-up in seconds"));

  auto* cal = app.add_subcommand("calibrate", "calibrate vehicle parameters or the OD matrix");
  common(cal);
  cal->add_option("stage", f.stage, "vehicles or demand")->required()->check(CLI::IsMember({"vehicles", "demand"}));
  f.given["trajectories"].push_back(cal->add_option("--trajectories", f.trajectories, "trajectory log file or directory"));
  f.given["detectors"].push_back(cal->add_option("--detectors", f.detectors, "observed detector counts"));
  f.given["route"].push_back(cal->add_option("--route", f.route, "shuttle route the trips follow"));
  f.given["replications"].push_back(cal->add_option("--replications", f.replications, "replications per grid point"));
  f.given["period"].push_back(cal->add_option("--period", f.period, "demand period to adjust"));

  auto* scen = app.add_subcommand("scenarios", "run the shuttle scenarios and write the impact report");
  common(scen);
  f.given["scenarios"].push_back(scen->add_option("--scenarios", f.scenarios, "comma-separated ids, e.g. S0,S3"));
  f.given["periods"].push_back(scen->add_option("--periods", f.periods, "comma-separated periods"));
  f.given["replications"].push_back(scen->add_option("--replications", f.replications, "replications per cell"));
  f.given["duration"].push_back(scen->add_option("--duration", f.duration, "measured duration in seconds"));
  f.given["warmup"].push_back(scen->add_option("--warmup", f.warmup, "warm-up in seconds"));
  scen->add_flag("--tune-s4", f.tune_s4, "tune the S4 shuttle speed toward S0");
  f.given["epsilon"].push_back(scen->add_option("--epsilon", f.epsilon, "tuning tolerance in percentage points"));

  auto* rep = app.add_subcommand("report", "re-render a saved scenario report");
  rep->add_option("--input,-i", f.input, "report.json from the scenarios command")->required();
  rep->add_option("--format", f.format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
  f.given["out"].push_back(rep->add_option("--out,-o", f.out_dir, "output file (default: stdout)"));

  auto* fix = app.add_subcommand("fixture", "write a built-in fixture with synthetic observations");
  fix->add_option("name", f.name, "corridor, district or ring")->required();
  f.given["out"].push_back(fix->add_option("--out,-o", f.out_dir, "output directory"));
  fix->add_option("--seed", f.seed, "seed for the synthetic observations");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << SHUTTLESIM_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(f, out);
    if (cal->parsed()) return f.stage == "vehicles" ? cmd_calibrate_vehicles(f, out) : cmd_calibrate_demand(f, out);
    if (scen->parsed()) return cmd_scenarios(f, out);
    if (rep->parsed()) return cmd_report(f, out);
    if (fix->parsed()) return cmd_fixture(f, out);
  } catch (const UsageError& e) {
    err << error_record("usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const NetworkError& e) {
    err << error_record("network", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const RoutingError& e) {
    err << error_record("routing", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const SimulationError& e) {
    err << error_record("simulation", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    err << error_record("input", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const std::exception& e) {
    err << error_record("runtime", e.what(), kExitFailure);
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace shuttlesim
