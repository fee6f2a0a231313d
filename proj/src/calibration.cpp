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

#include "shuttlesim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "shuttlesim/parallel.hpp"
#include "shuttlesim/rng.hpp"
#include "shuttlesim/units.hpp"

namespace shuttlesim {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kFree:
      return "free";
    case Condition::kFollowingShuttle:
      return "following-shuttle";
    case Condition::kShuttle:
      return "shuttle";
  }
  return "free";
}

Condition condition_from_string(std::string_view s) {
  if (s == "free") return Condition::kFree;
  if (s == "following-shuttle" || s == "following") return Condition::kFollowingShuttle;
  if (s == "shuttle") return Condition::kShuttle;
  throw std::invalid_argument("unknown trip condition: " + std::string(s));
}

void TrajectoryLog::validate() const {
  if ((condition == Condition::kShuttle) != (cls == VehicleClass::kShuttle))
    throw std::invalid_argument("trip " + trip + ": vehicle class does not match condition");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].t_s - samples[i - 1].t_s;
    if (std::abs(dt - 1.0) > 1e-6)
      throw std::invalid_argument("trip " + trip + ": samples must be 1 s apart");
  }
}

std::vector<Segment> section_segments(const Network& net, const std::vector<std::string>& group_names) {
  std::vector<Segment> out;
  for (const auto& g : net.segment_groups()) {
    if (!group_names.empty() && std::find(group_names.begin(), group_names.end(), g.name) == group_names.end())
      continue;
    for (Index s : g.sections) out.push_back({net.section(s).id, {s}});
  }
  return out;
}

namespace {

struct Visit {
  Index section;
  double base;
};

/// Section visits in order, with the along-log distance at each entry.
/// A single section skipped between two samples is recovered from the turn
/// graph.
std::vector<Visit> visits_of(const TrajectoryLog& log, const Network& net, std::vector<double>& pos) {
  std::vector<Visit> visits;
  pos.clear();
  for (const auto& s : log.samples) {
    const Index sec = net.section_index(s.section);
    if (visits.empty()) {
      visits.push_back({sec, 0.0});
    } else if (visits.back().section != sec) {
      const Index prev = visits.back().section;
      double base = visits.back().base + net.section(prev).length_m;
      if (!net.turn_between(prev, sec)) {
        Index bridge = kNoIndex;
        for (Index t : net.outgoing_turns(prev)) {
          const Index mid = net.turns()[t].to_section;
          if (net.turn_between(mid, sec)) {
            bridge = mid;
            break;
          }
        }
        if (bridge == kNoIndex)
          throw std::invalid_argument("trip " + log.trip + ": consecutive samples on unconnected sections");
        visits.push_back({bridge, base});
        base += net.section(bridge).length_m;
      }
      visits.push_back({sec, base});
    }
    pos.push_back(visits.back().base + s.offset_m);
  }
  return visits;
}

double crossing_time(const TrajectoryLog& log, const std::vector<double>& pos, double target, std::size_t* at) {
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
    if (pos[i] <= target && pos[i + 1] >= target && pos[i + 1] > pos[i]) {
      *at = i;
      const double f = (target - pos[i]) / (pos[i + 1] - pos[i]);
      return log.samples[i].t_s + f * (log.samples[i + 1].t_s - log.samples[i].t_s);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

SegmentTimes segment_travel_times(const std::vector<TrajectoryLog>& logs, const Network& net,
                                  const std::vector<Segment>& segments) {
  std::map<std::pair<std::size_t, Condition>, std::pair<double, int>> acc;
  for (const auto& log : logs) {
    log.validate();
    std::vector<double> pos;
    const auto visits = visits_of(log, net, pos);
    for (std::size_t g = 0; g < segments.size(); ++g) {
      const auto& seg = segments[g];
      if (seg.sections.empty()) continue;
      for (std::size_t j = 0; j + seg.sections.size() <= visits.size(); ++j) {
        bool match = true;
        for (std::size_t k = 0; k < seg.sections.size() && match; ++k)
          match = visits[j + k].section == seg.sections[k];
        if (!match) continue;
        const double start = visits[j].base;
        const std::size_t last = j + seg.sections.size() - 1;
        const double end = visits[last].base + net.section(visits[last].section).length_m;
        std::size_t i_in = 0, i_out = 0;
        const double t_in = crossing_time(log, pos, start, &i_in);
        const double t_out = crossing_time(log, pos, end, &i_out);
        if (std::isnan(t_in) || std::isnan(t_out) || t_out < t_in) break;
        double excluded = 0.0;
        for (std::size_t i = 0; i + 1 < log.samples.size(); ++i) {
          if (!log.samples[i].excluded) continue;
          const double a = std::max(log.samples[i].t_s, t_in);
          const double b = std::min(log.samples[i + 1].t_s, t_out);
          if (b > a) excluded += b - a;
        }
        auto& slot = acc[{g, log.condition}];
        slot.first += t_out - t_in - excluded;
        slot.second += 1;
        break;
      }
    }
  }
  SegmentTimes out;
  std::vector<Condition> seen;
  for (const auto& log : logs)
    if (std::find(seen.begin(), seen.end(), log.condition) == seen.end()) seen.push_back(log.condition);
  std::sort(seen.begin(), seen.end());
  for (std::size_t g = 0; g < segments.size(); ++g) {
    for (Condition c : seen) {
      auto it = acc.find({g, c});
      if (it == acc.end()) {
        out.missing.emplace_back(segments[g].id, c);
        continue;
      }
      out.observations.push_back({segments[g].id, c, it->second.first / it->second.second, it->second.second});
    }
  }
  return out;
}

double mape(const std::vector<double>& observed, const std::vector<double>& simulated) {
  if (observed.empty()) throw std::invalid_argument("MAPE needs at least one value");
  if (observed.size() != simulated.size()) throw std::invalid_argument("MAPE inputs differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(observed[i] > 0.0)) throw std::invalid_argument("MAPE observed value must be positive");
    sum += std::abs(observed[i] - simulated[i]) / observed[i];
  }
  return 100.0 * sum / static_cast<double>(observed.size());
}

ValidationResult validate_following(const std::vector<double>& observed,
                                    const std::vector<std::optional<double>>& simulated) {
  if (observed.size() != simulated.size()) throw std::invalid_argument("validation inputs differ in length");
  ValidationResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!simulated[i]) {
      r.ape.push_back(std::nullopt);
      continue;
    }
    if (!(observed[i] > 0.0)) throw std::invalid_argument("observed travel time must be positive");
    const double ape = 100.0 * std::abs(observed[i] - *simulated[i]) / observed[i];
    r.ape.push_back(ape);
    sum += ape;
    ++r.used;
  }
  r.mape = r.used > 0 ? sum / r.used : 0.0;
  return r;
}

double geh(double simulated, double observed) {
  const double total = simulated + observed;
  if (total <= 0.0) return 0.0;
  const double diff = simulated - observed;
  return std::sqrt(2.0 * diff * diff / total);
}

GehSummary geh_summary(const std::vector<double>& simulated, const std::vector<double>& observed) {
  if (simulated.size() != observed.size()) throw std::invalid_argument("GEH inputs differ in length");
  GehSummary s;
  int b5 = 0, b10 = 0;
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    const double g = geh(simulated[i], observed[i]);
    s.values.push_back(g);
    s.sum_squares += g * g;
    if (g < 5.0) ++b5;
    if (g < 10.0) ++b10;
  }
  if (!simulated.empty()) {
    s.below5 = static_cast<double>(b5) / simulated.size();
    s.below10 = static_cast<double>(b10) / simulated.size();
  }
  return s;
}

// ------------------------------------------------------------------ grid

namespace {

struct FieldInfo {
  const char* name;
  double lo, hi;
};

constexpr FieldInfo kFields[] = {
    {"speed_acceptance", 0.5, 2.0}, {"clearance", 0.0, 10.0},     {"yield_time", 0.0, 60.0},
    {"max_accel", 0.1, 10.0},       {"normal_decel", 0.1, 12.0},  {"max_decel", 0.1, 12.0},
    {"sensitivity", 0.05, 2.0},     {"reaction_normal", 0.05, 3.0}, {"reaction_at_stop", 0.05, 3.0},
    {"reaction_at_signal", 0.05, 3.0}, {"min_time_gap", 0.0, 5.0}, {"length", 2.0, 20.0},
    {"width", 1.0, 4.0},            {"max_speed_mph", 1.0, 100.0},
};

const FieldInfo* find_field(const std::string& name) {
  for (const auto& f : kFields)
    if (name == f.name) return &f;
  return nullptr;
}

void set_mean(ParamDist& d, double v) {
  if (d.deviation == 0.0) {
    d = ParamDist::fixed(v);
    return;
  }
  d.mean = v;
  d.min = std::min(d.min, v);
  d.max = std::max(d.max, v);
}

std::pair<std::string, std::string> split_field(const std::string& field) {
  const auto dot = field.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("parameter must be class.field: " + field);
  return {field.substr(0, dot), field.substr(dot + 1)};
}

}  // namespace

std::vector<std::string> param_fields() {
  std::vector<std::string> out;
  for (const char* cls : {"hdv", "shuttle"})
    for (const auto& f : kFields) out.push_back(std::string(cls) + "." + f.name);
  return out;
}

void set_param(VehicleClassParams& hdv, VehicleClassParams& shuttle, const std::string& field, double value) {
  const auto [cls, name] = split_field(field);
  VehicleClassParams* p = cls == "hdv" ? &hdv : cls == "shuttle" ? &shuttle : nullptr;
  const FieldInfo* info = find_field(name);
  if (!p || !info) throw std::invalid_argument("unknown parameter: " + field);
  if (!(value >= info->lo && value <= info->hi))
    throw std::invalid_argument("implausible value for " + field + ": " + std::to_string(value));
  if (name == "speed_acceptance") set_mean(p->speed_acceptance, value);
  else if (name == "clearance") set_mean(p->clearance_m, value);
  else if (name == "yield_time") set_mean(p->yield_time_s, value);
  else if (name == "max_accel") set_mean(p->max_accel, value);
  else if (name == "normal_decel") set_mean(p->normal_decel, value);
  else if (name == "max_decel") set_mean(p->max_decel, value);
  else if (name == "sensitivity") set_mean(p->sensitivity, value);
  else if (name == "reaction_normal") p->reaction_normal_s = value;
  else if (name == "reaction_at_stop") p->reaction_at_stop_s = value;
  else if (name == "reaction_at_signal") p->reaction_at_signal_s = value;
  else if (name == "min_time_gap") p->min_time_gap_s = value;
  else if (name == "length") p->length_m = value;
  else if (name == "width") p->width_m = value;
  else if (name == "max_speed_mph") p->max_speed_mps = units::mph(value);
}

std::size_t ParamGrid::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::vector<double> ParamGrid::point(std::size_t index) const {
  std::vector<double> v(axes.size());
  // Last axis varies fastest.
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto n = axes[k].values.size();
    v[k] = axes[k].values[index % n];
    index /= n;
  }
  return v;
}

void ParamGrid::validate() const {
  if (size() == 0) throw std::invalid_argument("parameter grid is empty");
  VehicleClassParams h = VehicleClassParams::hdv(), s = VehicleClassParams::shuttle();
  for (const auto& a : axes)
    for (double v : a.values) set_param(h, s, a.field, v);
}

std::pair<VehicleClassParams, VehicleClassParams> ParamGrid::apply(std::size_t index, const VehicleClassParams& hdv,
                                                                   const VehicleClassParams& shuttle) const {
  auto h = hdv;
  auto s = shuttle;
  const auto values = point(index);
  for (std::size_t k = 0; k < axes.size(); ++k) set_param(h, s, axes[k].field, values[k]);
  h.validate();
  s.validate();
  return {h, s};
}

CalibrationDesign route_design(const Network& net, const std::string& route) {
  const auto r = net.find_route(route);
  if (!r) throw NetworkError("unknown transit route", route);
  CalibrationDesign d;
  d.path = net.transit_routes()[*r].sections;
  d.shuttle_route = route;
  for (Index s : d.path) {
    for (const auto& g : net.segment_groups()) {
      if (std::find(g.sections.begin(), g.sections.end(), s) != g.sections.end()) {
        d.segments.push_back({net.section(s).id, {s}});
        break;
      }
    }
  }
  return d;
}

std::vector<TrajectoryLog> simulate_conditions(const Network& net, const VehicleClassParams& hdv,
                                               const VehicleClassParams& shuttle, const CalibrationDesign& design,
                                               std::uint64_t seed) {
  SimInputs in;
  in.hdv = hdv;
  in.shuttle = shuttle;
  std::string route_id;
  if (design.shuttle_route) route_id = *design.shuttle_route;
  for (int k = 0; k < design.trips; ++k) {
    const double base = k * design.spacing_s;
    ScriptedDeparture free_trip{base, VehicleClass::kHdv, design.path, std::nullopt, std::nullopt,
                                design.entry_speed_mps, "free:" + std::to_string(k)};
    ScriptedDeparture shuttle_trip{base + design.shuttle_delay_s, VehicleClass::kShuttle, design.path, std::nullopt,
                                   design.shuttle_route, design.entry_speed_mps, "shuttle:" + std::to_string(k)};
    ScriptedDeparture follow_trip{base + design.shuttle_delay_s + design.follower_gap_s, VehicleClass::kHdv,
                                  design.path, std::nullopt, std::nullopt, design.entry_speed_mps,
                                  "following:" + std::to_string(k)};
    in.scripted.push_back(free_trip);
    in.scripted.push_back(shuttle_trip);
    in.scripted.push_back(follow_trip);
  }
  SimConfig cfg;
  cfg.seed = seed;
  cfg.warmup_s = 0.0;
  cfg.duration_s = design.trips * design.spacing_s + 2400.0;
  const auto out = run(net, in, cfg);

  std::map<VehicleId, TrajectoryLog> logs;
  for (const auto& rec : out.vehicles) {
    TrajectoryLog log;
    log.cls = rec.cls;
    log.route = route_id;
    const auto colon = rec.tag.find(':');
    const std::string kind = rec.tag.substr(0, colon);
    log.condition = kind == "free"        ? Condition::kFree
                    : kind == "shuttle"   ? Condition::kShuttle
                                          : Condition::kFollowingShuttle;
    log.trip = rec.tag;
    logs.emplace(rec.id, std::move(log));
  }
  for (const auto& s : out.trajectories) {
    auto it = logs.find(s.vehicle);
    if (it == logs.end()) continue;
    it->second.samples.push_back({s.t_s, net.section(s.section).id, s.offset_m, s.speed_mps, s.excluded});
  }
  std::vector<TrajectoryLog> result;
  for (auto& [id, log] : logs) result.push_back(std::move(log));
  return result;
}

namespace {

bool calibration_condition(Condition c) { return c == Condition::kFree || c == Condition::kShuttle; }

}  // namespace

GridResult grid_search_vehicle_params(const ParamGrid& grid, const Network& net, const SegmentTimes& observed,
                                      const CalibrationDesign& design, const VehicleClassParams& hdv_base,
                                      const VehicleClassParams& shuttle_base, int replications, std::uint64_t seed,
                                      unsigned threads) {
  grid.validate();
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  bool has_free = false, has_shuttle = false;
  for (const auto& o : observed.observations) {
    has_free |= o.condition == Condition::kFree;
    has_shuttle |= o.condition == Condition::kShuttle;
  }
  if (!has_free && !has_shuttle) throw std::invalid_argument("observations hold no calibration condition");

  GridResult result;
  result.table.resize(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        GridScore& score = result.table[i];
        score.index = i;
        score.values = grid.point(i);
        try {
          const auto [h, s] = grid.apply(i, hdv_base, shuttle_base);
          std::map<std::pair<std::string, Condition>, double> sim;
          for (int r = 0; r < replications; ++r) {
            const auto logs = simulate_conditions(net, h, s, design, seed + static_cast<std::uint64_t>(r));
            for (const auto& o : segment_travel_times(logs, net, design.segments).observations)
              sim[{o.segment, o.condition}] += o.mean_s / replications;
          }
          std::vector<double> obs_c, sim_c;
          std::map<Condition, std::pair<std::vector<double>, std::vector<double>>> per;
          for (const auto& o : observed.observations) {
            auto it = sim.find({o.segment, o.condition});
            if (it == sim.end())
              throw std::runtime_error("segment " + o.segment + " not traversed in condition " +
                                       std::string(to_string(o.condition)));
            per[o.condition].first.push_back(o.mean_s);
            per[o.condition].second.push_back(it->second);
            if (calibration_condition(o.condition)) {
              obs_c.push_back(o.mean_s);
              sim_c.push_back(it->second);
            }
          }
          const double nan = std::numeric_limits<double>::quiet_NaN();
          auto cond_mape = [&](Condition c) {
            auto it = per.find(c);
            return it == per.end() ? nan : mape(it->second.first, it->second.second);
          };
          score.mape_free = cond_mape(Condition::kFree);
          score.mape_following = cond_mape(Condition::kFollowingShuttle);
          score.mape_shuttle = cond_mape(Condition::kShuttle);
          score.calibration_mape = mape(obs_c, sim_c);
          score.ok = true;
        } catch (const std::exception& e) {
          score.ok = false;
          score.error = e.what();
        }
      },
      threads);

  bool found = false;
  for (const auto& s : result.table) {
    if (!s.ok) continue;
    if (!found || s.calibration_mape < result.table[result.best].calibration_mape) {
      result.best = s.index;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("every grid point failed: " + result.table.front().error);
  std::tie(result.hdv, result.shuttle) = grid.apply(result.best, hdv_base, shuttle_base);
  return result;
}

// -------------------------------------------------------- OD adjustment

CountEvaluator assignment_count_evaluator(const Network& net, const AssignmentPlan& plan,
                                          const std::vector<Index>& detectors) {
  struct OdWeights {
    std::string origin, destination;
    std::vector<double> weight;  // per detector
  };
  std::vector<OdWeights> table;
  if (!plan.intervals.empty()) {
    for (const auto& od : plan.intervals.front().ods) {
      OdWeights w{od.origin, od.destination, std::vector<double>(detectors.size(), 0.0)};
      for (std::size_t p = 0; p < od.paths.size(); ++p) {
        for (std::size_t k = 0; k < detectors.size(); ++k) {
          const Index sec = net.detectors().at(detectors[k]).section;
          const auto& secs = od.paths[p].sections;
          if (std::find(secs.begin(), secs.end(), sec) != secs.end()) w.weight[k] += od.shares[p];
        }
      }
      table.push_back(std::move(w));
    }
  }
  return [table = std::move(table), n = detectors.size()](const OdMatrix& m) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < m.centroids.size(); ++i) pos[m.centroids[i]] = i;
    std::vector<double> counts(n, 0.0);
    for (const auto& w : table) {
      auto o = pos.find(w.origin);
      auto d = pos.find(w.destination);
      if (o == pos.end() || d == pos.end()) continue;
      const double trips = m(o->second, d->second);
      for (std::size_t k = 0; k < n; ++k) counts[k] += trips * w.weight[k];
    }
    return counts;
  };
}

OdAdjustResult adjust_od(const OdMatrix& seed, const std::vector<double>& observed, const CountEvaluator& evaluate,
                         const OdAdjustOptions& opt) {
  seed.validate();
  if (!(opt.bound >= 0.0 && opt.bound < 1.0)) throw std::invalid_argument("adjustment bound must be in [0, 1)");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < seed.trips.size(); ++i)
    if (seed.trips[i] > 0.0) cells.push_back(i);

  const double lo = 1.0 - opt.bound, hi = 1.0 + opt.bound;
  auto matrix_at = [&](const std::vector<double>& theta) {
    OdMatrix m = seed;
    for (std::size_t k = 0; k < cells.size(); ++k) m.trips[cells[k]] = seed.trips[cells[k]] * theta[k];
    return m;
  };
  auto objective = [&](const std::vector<double>& theta) {
    const auto sim = evaluate(matrix_at(theta));
    if (sim.size() != observed.size()) throw std::invalid_argument("evaluator and observations differ in length");
    double f = 0.0;
    for (std::size_t k = 0; k < sim.size(); ++k) {
      const double g = geh(sim[k], observed[k]);
      f += g * g;
    }
    for (double t : theta) f += opt.penalty * (t - 1.0) * (t - 1.0);
    return f;
  };

  OdAdjustResult r;
  std::vector<double> theta(cells.size(), 1.0);
  double f = objective(theta);
  r.objective.push_back(f);
  r.before = geh_summary(evaluate(seed), observed);
  Rng rng = make_stream(opt.seed, 0x0dULL << 40);
  std::bernoulli_distribution coin(0.5);
  double step = opt.step;
  if (f > 1e-12 && !cells.empty()) {
    for (int k = 0; k < opt.iterations; ++k) {
      const double c = opt.perturbation / std::pow(k + 1.0, 0.101);
      std::vector<double> plus = theta, minus = theta, delta(cells.size());
      for (std::size_t i = 0; i < cells.size(); ++i) {
        delta[i] = coin(rng) ? 1.0 : -1.0;
        plus[i] = std::clamp(theta[i] + c * delta[i], lo, hi);
        minus[i] = std::clamp(theta[i] - c * delta[i], lo, hi);
      }
      const double df = objective(plus) - objective(minus);
      std::vector<double> grad(cells.size(), 0.0);
      double gmax = 0.0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const double span = plus[i] - minus[i];
        if (std::abs(span) > 1e-15) grad[i] = df / span;
        gmax = std::max(gmax, std::abs(grad[i]));
      }
      if (gmax <= 0.0) continue;
      std::vector<double> cand(cells.size());
      for (std::size_t i = 0; i < cells.size(); ++i)
        cand[i] = std::clamp(theta[i] - step * grad[i] / gmax, lo, hi);
      const double fc = objective(cand);
      if (fc < f) {
        theta = std::move(cand);
        f = fc;
        r.objective.push_back(f);
        ++r.accepted;
        step = std::min(step * 1.25, opt.bound);
      } else {
        step *= 0.7;
        if (step < 1e-4) step = opt.step;
      }
    }
  }
  r.improved = r.accepted > 0;
  r.matrix = r.improved ? matrix_at(theta) : seed;
  r.after = geh_summary(evaluate(r.matrix), observed);
  if (!r.improved)
    r.diagnostics = f <= 1e-12 ? "observations already matched" : "no improving step found; seed returned";
  return r;
}

}  // namespace shuttlesim
