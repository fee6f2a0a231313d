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

#include "shuttlesim/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "shuttlesim/parallel.hpp"
#include "shuttlesim/units.hpp"

namespace shuttlesim {

std::string_view to_string(Period p) { return p == Period::kPeak ? "peak" : "off-peak"; }

Period period_from_string(std::string_view s) {
  if (s == "off-peak" || s == "offpeak") return Period::kOffPeak;
  if (s == "peak") return Period::kPeak;
  throw std::invalid_argument("unknown period: " + std::string(s));
}

void Scenario::validate() const {
  if (id.empty()) throw std::invalid_argument("scenario needs an id");
  if (headway_min && !(*headway_min > 0.0)) throw std::invalid_argument("scenario " + id + ": headway must be positive");
  if (speed_mph && !(*speed_mph > 0.0)) throw std::invalid_argument("scenario " + id + ": speed must be positive");
  if (speed_mph && !headway_min) throw std::invalid_argument("scenario " + id + ": speed override without shuttles");
}

std::vector<Scenario> standard_scenarios() {
  return {{"S0", std::nullopt, std::nullopt},
          {"S1", 30.0, std::nullopt},
          {"S2", 20.0, std::nullopt},
          {"S3", 10.0, std::nullopt},
          {"S4", 10.0, 15.0}};
}

Scenario scenario_by_id(const std::string& id) {
  for (auto& s : standard_scenarios())
    if (s.id == id) return s;
  throw std::invalid_argument("unknown scenario: " + id);
}

std::optional<double> delay_ratio(const std::vector<Traversal>& traversals) {
  double delay = 0.0, actual = 0.0;
  bool any = false;
  for (const auto& t : traversals) {
    if (t.cls != VehicleClass::kHdv) continue;
    const double tt = t.travel_time_s();
    delay += std::max(0.0, tt - t.ideal_s);
    actual += tt;
    any = true;
  }
  if (!any || actual <= 0.0) return std::nullopt;
  return 100.0 * delay / actual;
}

std::optional<double> weighted_speed(const std::vector<Traversal>& traversals) {
  double distance = 0.0, time = 0.0;
  for (const auto& t : traversals) {
    if (t.cls != VehicleClass::kHdv) continue;
    distance += t.distance_m;
    time += t.travel_time_s();
  }
  if (time <= 0.0) return std::nullopt;
  return units::to_mph(distance / time);
}

const CellResult* MetricsReport::find(const std::string& scenario, Period period) const {
  for (const auto& c : cells)
    if (c.scenario == scenario && c.period == period) return &c;
  return nullptr;
}

AssignmentPlan period_plan(const ExperimentSetup& setup, Period period) {
  const auto demand = DemandProfile::uniform(setup.demand(period), setup.config.horizon_s());
  const auto model = period == Period::kPeak ? ChoiceModel::clogit() : ChoiceModel::logit();
  return iterate_assignment(*setup.net, demand, model, setup.assignment_iterations, 1e-3, bpr_costs(*setup.net))
      .plan;
}

namespace {

GroupMetrics score(const std::vector<Traversal>& ts) {
  GroupMetrics m;
  m.ratio = delay_ratio(ts);
  m.speed_mph = weighted_speed(ts);
  m.traversals = static_cast<std::size_t>(
      std::count_if(ts.begin(), ts.end(), [](const Traversal& t) { return t.cls == VehicleClass::kHdv; }));
  return m;
}

GroupMetrics mean_of(const std::vector<const GroupMetrics*>& ms) {
  GroupMetrics out;
  double ratio = 0.0, speed = 0.0;
  int n_ratio = 0, n_speed = 0;
  for (const auto* m : ms) {
    out.traversals += m->traversals;
    if (m->ratio) ratio += *m->ratio, ++n_ratio;
    if (m->speed_mph) speed += *m->speed_mph, ++n_speed;
  }
  if (n_ratio > 0) out.ratio = ratio / n_ratio;
  if (n_speed > 0) out.speed_mph = speed / n_speed;
  return out;
}

CellResult assemble(const Scenario& s, Period p, std::vector<ReplicationMetrics> reps, std::size_t n_groups) {
  CellResult c;
  c.scenario = s.id;
  c.period = p;
  c.shuttle_speed_mph = s.speed_mph;
  c.replications = std::move(reps);
  for (std::size_t g = 0; g < n_groups; ++g) {
    std::vector<const GroupMetrics*> ms;
    for (const auto& r : c.replications) ms.push_back(&r.groups[g]);
    c.groups.push_back(mean_of(ms));
  }
  std::vector<const GroupMetrics*> agg;
  for (const auto& r : c.replications) agg.push_back(&r.aggregated);
  c.aggregated = mean_of(agg);
  return c;
}

double route_limit_mph(const ExperimentSetup& setup) {
  double limit = 0.0;
  for (const auto& id : setup.shuttle_routes) {
    const auto r = setup.net->find_route(id);
    if (!r) throw NetworkError("unknown transit route", id);
    for (Index s : setup.net->transit_routes()[*r].sections)
      limit = std::max(limit, units::to_mph(setup.net->section(s).speed_limit_mps));
  }
  return limit;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

std::string fmt_raw(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

ReplicationMetrics run_replication(const ExperimentSetup& setup, const Scenario& scenario, Period period,
                                   const AssignmentPlan& plan, std::uint64_t seed) {
  scenario.validate();
  SimInputs in;
  in.hdv = setup.hdv;
  in.shuttle = setup.shuttle;
  in.yield = setup.yield;
  in.plan = plan;
  SimConfig cfg = setup.config;
  cfg.seed = seed;
  cfg.record_trajectories = false;
  in.demand = DemandProfile::uniform(setup.demand(period), cfg.horizon_s());
  if (scenario.headway_min) {
    std::optional<double> cap;
    if (scenario.speed_mph) cap = units::mph(*scenario.speed_mph);
    for (const auto& r : setup.shuttle_routes) in.shuttles.push_back({r, *scenario.headway_min, cap});
  }
  const auto out = run(*setup.net, in, cfg);

  const std::size_t n_groups = setup.net->segment_groups().size();
  std::vector<std::vector<Traversal>> by_group(n_groups);
  for (const auto& t : out.traversals) by_group[t.group].push_back(t);
  ReplicationMetrics m;
  m.seed = seed;
  for (const auto& ts : by_group) m.groups.push_back(score(ts));
  m.aggregated = score(out.traversals);
  return m;
}

MetricsReport run_matrix(const ExperimentSetup& setup, const std::vector<Scenario>& scenarios,
                         const std::vector<Period>& periods, int replications, std::uint64_t seed,
                         unsigned threads) {
  if (!setup.net) throw std::invalid_argument("experiment setup has no network");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  for (const auto& s : scenarios) s.validate();

  std::map<Period, AssignmentPlan> plans;
  for (Period p : periods) plans.emplace(p, period_plan(setup, p));

  struct Job {
    std::size_t cell;
    int rep;
  };
  std::vector<std::pair<const Scenario*, Period>> cells;
  for (Period p : periods)
    for (const auto& s : scenarios) cells.emplace_back(&s, p);
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int r = 0; r < replications; ++r) jobs.push_back({c, r});

  std::vector<ReplicationMetrics> results(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t j) {
        const auto& [s, p] = cells[jobs[j].cell];
        results[j] = run_replication(setup, *s, p, plans.at(p), seed + static_cast<std::uint64_t>(jobs[j].rep));
      },
      threads);

  MetricsReport report;
  for (const auto& g : setup.net->segment_groups()) report.groups.push_back(g.name);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<ReplicationMetrics> reps(results.begin() + c * replications,
                                         results.begin() + (c + 1) * replications);
    report.cells.push_back(assemble(*cells[c].first, cells[c].second, std::move(reps), report.groups.size()));
  }
  return report;
}

TuningResult tune_shuttle_speed(const ExperimentSetup& setup, Period period, double target_ratio,
                                const TuneOptions& options, int replications, std::uint64_t seed,
                                unsigned threads) {
  if (!(options.step_mph > 0.0) || !(options.epsilon >= 0.0) || !(options.start_mph > 0.0))
    throw std::invalid_argument("tuning step, start and epsilon must be positive");
  double cap = route_limit_mph(setup);
  if (options.max_speed_mph) cap = std::max(cap, *options.max_speed_mph);

  TuningResult best;
  best.period = period;
  best.target_ratio = target_ratio;
  bool have = false;
  double speed = options.start_mph;
  for (;;) {
    Scenario s{"S4", scenario_by_id("S3").headway_min, speed};
    auto report = run_matrix(setup, {s}, {period}, replications, seed, threads);
    CellResult& cell = report.cells.front();
    const double ratio = cell.aggregated.ratio.value_or(0.0);
    best.attempts.emplace_back(speed, ratio);
    const double err = std::abs(ratio - target_ratio);
    if (!have || err < std::abs(best.ratio - target_ratio)) {
      best.speed_mph = speed;
      best.ratio = ratio;
      best.cell = std::move(cell);
      have = true;
    }
    if (err <= options.epsilon) {
      best.speed_mph = speed;
      best.ratio = ratio;
      best.cell = report.cells.front();
      best.within = true;
      break;
    }
    if (speed >= cap - 1e-9) break;
    speed = std::min(speed + options.step_mph, cap);
  }
  return best;
}

std::string format_report_table(const MetricsReport& report) {
  std::ostringstream os;
  for (Period p : {Period::kOffPeak, Period::kPeak}) {
    std::vector<const CellResult*> cols;
    for (const auto& c : report.cells)
      if (c.period == p) cols.push_back(&c);
    if (cols.empty()) continue;
    os << "## " << to_string(p) << "\n\n| Segment |";
    for (const auto* c : cols) {
      os << ' ' << c->scenario;
      if (c->shuttle_speed_mph) os << " (" << fmt(c->shuttle_speed_mph) << " mph)";
      os << " ratio % | " << c->scenario << " speed mph |";
    }
    os << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) os << "---:|---:|";
    os << '\n';
    for (std::size_t g = 0; g <= report.groups.size(); ++g) {
      const bool agg = g == report.groups.size();
      os << "| " << (agg ? std::string("Aggregated") : report.groups[g]) << " |";
      for (const auto* c : cols) {
        const GroupMetrics& m = agg ? c->aggregated : c->groups[g];
        os << ' ' << fmt(m.ratio) << " | " << fmt(m.speed_mph) << " |";
      }
      os << '\n';
    }
    os << '\n';
  }
  for (const auto& t : report.tuning) {
    os << "tuned " << to_string(t.period) << ": " << fmt(t.speed_mph) << " mph, ratio " << fmt(t.ratio)
       << " vs target " << fmt(t.target_ratio) << (t.within ? "" : " (best attempt, target not reached)") << '\n';
  }
  return os.str();
}

std::string format_report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "scenario,period,shuttle_speed_mph,seed,group,traversals,ratio_pct,speed_mph\n";
  for (const auto& c : report.cells) {
    for (const auto& r : c.replications) {
      for (std::size_t g = 0; g <= report.groups.size(); ++g) {
        const bool agg = g == report.groups.size();
        const GroupMetrics& m = agg ? r.aggregated : r.groups[g];
        os << c.scenario << ',' << to_string(c.period) << ',' << fmt_raw(c.shuttle_speed_mph) << ',' << r.seed << ','
           << (agg ? std::string("Aggregated") : report.groups[g]) << ',' << m.traversals << ',' << fmt_raw(m.ratio)
           << ',' << fmt_raw(m.speed_mph) << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace shuttlesim
