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

#include "shuttlesim/route_choice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace shuttlesim {

std::vector<double> free_flow_costs(const Network& net) {
  std::vector<double> c;
  c.reserve(net.sections().size());
  for (const auto& s : net.sections()) c.push_back(s.length_m / s.speed_limit_mps);
  return c;
}

namespace {

struct SearchLimits {
  std::vector<char> blocked_node;                 // sections ending here cannot be entered
  std::unordered_set<std::uint64_t> removed_edge;  // (from << 32) | to
  std::vector<char> excluded_origin;
};

std::uint64_t edge_key(Index from, Index to) { return (static_cast<std::uint64_t>(from) << 32) | to; }

/// Multi-source Dijkstra over the section graph. Each source carries its
/// starting cost. Returns the cheapest section sequence reaching a
/// destination, or nothing.
std::optional<std::vector<Index>> shortest(const Network& net, const std::vector<std::pair<Index, double>>& sources,
                                           const std::vector<char>& is_destination, const std::vector<double>& cost,
                                           const SearchLimits& limits) {
  const std::size_t n = net.sections().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<Index> prev(n, kNoIndex);
  using Entry = std::pair<double, Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  for (const auto& [s, c] : sources) {
    if (c < dist[s]) {
      dist[s] = c;
      pq.emplace(c, s);
    }
  }
  while (!pq.empty()) {
    auto [d, s] = pq.top();
    pq.pop();
    if (d > dist[s]) continue;
    if (is_destination[s]) {
      std::vector<Index> seq;
      for (Index cur = s; cur != kNoIndex; cur = prev[cur]) seq.push_back(cur);
      std::reverse(seq.begin(), seq.end());
      return seq;
    }
    for (Index t_idx : net.outgoing_turns(s)) {
      const Index t = net.turns()[t_idx].to_section;
      if (!limits.blocked_node.empty() && limits.blocked_node[net.section(t).to_node]) continue;
      if (limits.removed_edge.count(edge_key(s, t))) continue;
      const double nd = d + cost[t];
      if (nd < dist[t]) {
        dist[t] = nd;
        prev[t] = s;
        pq.emplace(nd, t);
      }
    }
  }
  return std::nullopt;
}

bool node_simple(const Network& net, const std::vector<Index>& secs) {
  std::unordered_set<Index> seen;
  if (secs.empty()) return true;
  seen.insert(net.section(secs.front()).from_node);
  for (Index s : secs)
    if (!seen.insert(net.section(s).to_node).second) return false;
  return true;
}

Path make_path(const Network& net, std::vector<Index> secs, const std::vector<double>& cost) {
  Path p;
  for (Index s : secs) {
    p.length_m += net.section(s).length_m;
    p.cost += cost[s];
  }
  p.sections = std::move(secs);
  return p;
}

bool path_less(const Path& a, const Path& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.sections < b.sections;
}

}  // namespace

std::vector<Path> k_shortest_paths(const Network& net, const std::vector<Index>& origins,
                                   const std::vector<Index>& destinations, std::size_t k,
                                   const std::vector<double>& section_cost) {
  if (section_cost.size() != net.sections().size())
    throw std::invalid_argument("section cost vector does not match the network");
  std::vector<Path> accepted;
  if (k == 0) return accepted;
  std::vector<char> is_dest(net.sections().size(), 0);
  for (Index d : destinations) is_dest.at(d) = 1;

  SearchLimits none;
  std::vector<std::pair<Index, double>> sources;
  for (Index o : origins) sources.emplace_back(o, section_cost.at(o));
  auto first = shortest(net, sources, is_dest, section_cost, none);
  if (!first) throw RoutingError("destination unreachable");
  accepted.push_back(make_path(net, *first, section_cost));

  std::vector<Path> candidates;
  auto known = [&](const std::vector<Index>& secs) {
    for (const auto& p : accepted)
      if (p.sections == secs) return true;
    for (const auto& p : candidates)
      if (p.sections == secs) return true;
    return false;
  };

  while (accepted.size() < k) {
    const std::vector<Index> prev = accepted.back().sections;
    for (int i = -1; i + 1 < static_cast<int>(prev.size()); ++i) {
      SearchLimits limits;
      std::vector<std::pair<Index, double>> spur_sources;
      std::vector<Index> root;
      double root_cost = 0.0;
      if (i < 0) {
        limits.excluded_origin.assign(net.sections().size(), 0);
        for (const auto& p : accepted) limits.excluded_origin[p.sections.front()] = 1;
        for (Index o : origins)
          if (!limits.excluded_origin[o]) spur_sources.emplace_back(o, section_cost[o]);
      } else {
        root.assign(prev.begin(), prev.begin() + i + 1);
        for (Index s : root) root_cost += section_cost[s];
        limits.blocked_node.assign(net.nodes().size(), 0);
        limits.blocked_node[net.section(root.front()).from_node] = 1;
        for (Index s : root) limits.blocked_node[net.section(s).to_node] = 1;
        for (const auto& p : accepted)
          if (p.sections.size() > root.size() && std::equal(root.begin(), root.end(), p.sections.begin()))
            limits.removed_edge.insert(edge_key(p.sections[root.size() - 1], p.sections[root.size()]));
        spur_sources.emplace_back(root.back(), root_cost);
        // The spur section is already on the path; stopping there would just
        // repeat the root.
      }
      if (spur_sources.empty()) continue;
      std::vector<char> dest_mask = is_dest;
      if (!root.empty()) dest_mask[root.back()] = 0;
      auto spur = shortest(net, spur_sources, dest_mask, section_cost, limits);
      if (!spur) continue;
      std::vector<Index> full = root;
      if (!full.empty()) full.pop_back();
      full.insert(full.end(), spur->begin(), spur->end());
      if (!node_simple(net, full) || known(full)) continue;
      candidates.push_back(make_path(net, std::move(full), section_cost));
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(), path_less);
    accepted.push_back(std::move(*best));
    candidates.erase(best);
  }
  return accepted;
}

std::vector<Path> k_shortest_paths(const Network& net, Index origin_centroid, Index destination_centroid,
                                   std::size_t k, const std::vector<double>& section_cost) {
  const auto& o = net.centroids().at(origin_centroid);
  const auto& d = net.centroids().at(destination_centroid);
  auto origins = o.origin_sections();
  auto dests = d.destination_sections();
  if (origins.empty()) throw RoutingError("centroid has no outgoing connector: " + o.id);
  if (dests.empty()) throw RoutingError("centroid has no incoming connector: " + d.id);
  return k_shortest_paths(net, origins, dests, k, section_cost);
}

namespace {

std::vector<double> softmax(std::vector<double> u) {
  const double top = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (double& x : u) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : u) x /= sum;
  return u;
}

double reference_cost(std::span<const double> costs) {
  const double c = *std::min_element(costs.begin(), costs.end());
  return c > 0.0 ? c : 1.0;
}

}  // namespace

std::vector<double> logit_probabilities(std::span<const double> costs, double scale) {
  if (costs.empty()) throw std::invalid_argument("logit over an empty choice set");
  const double ref = reference_cost(costs);
  std::vector<double> u;
  u.reserve(costs.size());
  for (double c : costs) u.push_back(-scale * c / ref);
  return softmax(std::move(u));
}

std::vector<double> clogit_probabilities(const std::vector<std::vector<double>>& overlap_m,
                                         std::span<const double> lengths_m, std::span<const double> costs,
                                         double scale, double beta, double gamma) {
  if (costs.empty()) throw std::invalid_argument("C-logit over an empty choice set");
  if (overlap_m.size() != costs.size() || lengths_m.size() != costs.size())
    throw std::invalid_argument("C-logit inputs have inconsistent sizes");
  const double ref = reference_cost(costs);
  std::vector<double> u;
  u.reserve(costs.size());
  for (std::size_t k = 0; k < costs.size(); ++k) {
    double sum = 0.0;
    for (std::size_t l = 0; l < costs.size(); ++l)
      sum += std::pow(overlap_m[k][l] / std::sqrt(lengths_m[k] * lengths_m[l]), gamma);
    const double commonality = beta * std::log(sum);
    u.push_back(-scale * costs[k] / ref - commonality);
  }
  return softmax(std::move(u));
}

std::vector<std::vector<double>> overlap_matrix(const Network& net, const std::vector<Path>& paths) {
  std::vector<std::vector<Index>> sorted;
  for (const auto& p : paths) {
    auto s = p.sections;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    sorted.push_back(std::move(s));
  }
  std::vector<std::vector<double>> out(paths.size(), std::vector<double>(paths.size(), 0.0));
  for (std::size_t a = 0; a < paths.size(); ++a) {
    for (std::size_t b = a; b < paths.size(); ++b) {
      std::vector<Index> common;
      std::set_intersection(sorted[a].begin(), sorted[a].end(), sorted[b].begin(), sorted[b].end(),
                            std::back_inserter(common));
      double len = 0.0;
      for (Index s : common) len += net.section(s).length_m;
      out[a][b] = out[b][a] = len;
    }
  }
  return out;
}

std::vector<double> ChoiceModel::probabilities(const Network& net, const std::vector<Path>& paths,
                                               std::span<const double> costs) const {
  if (kind == ChoiceModelKind::kLogit) return logit_probabilities(costs, scale);
  std::vector<double> lengths;
  for (const auto& p : paths) lengths.push_back(p.length_m);
  return clogit_probabilities(overlap_matrix(net, paths), lengths, costs, scale, beta, gamma);
}

const OdPlan* AssignmentPlan::find(double t, const std::string& origin, const std::string& destination) const {
  if (intervals.empty()) return nullptr;
  const IntervalPlan* chosen = &intervals.front();
  for (const auto& iv : intervals)
    if (t >= iv.start_s) chosen = &iv;
  for (const auto& od : chosen->ods)
    if (od.origin == origin && od.destination == destination) return &od;
  return nullptr;
}

void AssignmentPlan::validate() const {
  if (!(fixed_fraction >= 0.0 && fixed_fraction <= 1.0))
    throw std::invalid_argument("fixed fraction outside [0, 1]");
  for (const auto& iv : intervals) {
    for (const auto& od : iv.ods) {
      if (od.paths.size() != od.shares.size() || od.paths.empty())
        throw std::invalid_argument("plan entry has mismatched paths/shares: " + od.origin + "->" + od.destination);
      double sum = 0.0;
      for (double s : od.shares) {
        if (s < 0.0) throw std::invalid_argument("negative path share: " + od.origin + "->" + od.destination);
        sum += s;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("path shares do not sum to 1: " + od.origin + "->" + od.destination);
    }
  }
}

CostFunction bpr_costs(const Network& net, double alpha, double beta, double capacity_per_lane_vph) {
  std::vector<double> t0 = free_flow_costs(net);
  std::vector<double> capacity;
  for (Index s = 0; s < net.sections().size(); ++s) {
    double green = 1.0;
    bool signalized = false;
    double best = 0.0;
    for (Index t : net.outgoing_turns(s)) {
      const auto& turn = net.turns()[t];
      if (turn.control == TurnControl::kSignal) {
        signalized = true;
        best = std::max(best, green_ratio(net.signals()[turn.signal], turn.phase));
      }
    }
    if (signalized) green = best;
    capacity.push_back(net.section(s).lane_count * capacity_per_lane_vph * green);
  }
  return [t0 = std::move(t0), capacity = std::move(capacity), alpha, beta](const std::vector<double>& flow) {
    std::vector<double> c(t0.size());
    for (std::size_t i = 0; i < t0.size(); ++i) c[i] = t0[i] * (1.0 + alpha * std::pow(flow[i] / capacity[i], beta));
    return c;
  };
}

std::vector<double> section_flows(const Network& net, const IntervalPlan& interval, const OdMatrix& trips,
                                  double duration_s) {
  std::vector<double> flow(net.sections().size(), 0.0);
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < trips.centroids.size(); ++i) pos[trips.centroids[i]] = i;
  for (const auto& od : interval.ods) {
    auto o = pos.find(od.origin);
    auto d = pos.find(od.destination);
    if (o == pos.end() || d == pos.end()) continue;
    const double rate = trips(o->second, d->second) * 3600.0 / duration_s;
    for (std::size_t p = 0; p < od.paths.size(); ++p)
      for (Index s : od.paths[p].sections) flow[s] += rate * od.shares[p];
  }
  return flow;
}

namespace {

std::vector<double> path_costs(const std::vector<Path>& paths, const std::vector<double>& section_cost) {
  std::vector<double> out;
  for (const auto& p : paths) {
    double c = 0.0;
    for (Index s : p.sections) c += section_cost[s];
    out.push_back(c);
  }
  return out;
}

}  // namespace

AssignmentResult iterate_assignment(const Network& net, const DemandProfile& demand, const ChoiceModel& model,
                                    int max_iterations, double gap_tolerance, const CostFunction& cost_fn,
                                    std::size_t max_paths, double fixed_fraction) {
  const CostFunction costs_of = cost_fn ? cost_fn : bpr_costs(net);
  AssignmentResult result;
  result.plan.model = model;
  result.plan.fixed_fraction = fixed_fraction;
  result.converged = true;
  std::vector<double> costs = free_flow_costs(net);

  for (const auto& slice : demand.slices) {
    slice.trips.validate();
    IntervalPlan interval{slice.start_s, slice.duration_s, {}};
    std::vector<double> demand_of;
    const std::size_t n = slice.trips.size();
    for (std::size_t o = 0; o < n; ++o) {
      for (std::size_t d = 0; d < n; ++d) {
        if (slice.trips(o, d) <= 0.0) continue;
        const auto oc = net.find_centroid(slice.trips.centroids[o]);
        const auto dc = net.find_centroid(slice.trips.centroids[d]);
        if (!oc || !dc) throw RoutingError("demand references unknown centroid");
        OdPlan od;
        od.origin = slice.trips.centroids[o];
        od.destination = slice.trips.centroids[d];
        // Path sets are rebuilt per interval from the costs left by the
        // previous interval.
        od.paths = k_shortest_paths(net, *oc, *dc, max_paths, costs);
        od.shares = model.probabilities(net, od.paths, path_costs(od.paths, costs));
        interval.ods.push_back(std::move(od));
        demand_of.push_back(slice.trips(o, d));
      }
    }
    const double total = std::accumulate(demand_of.begin(), demand_of.end(), 0.0);
    double gap = 0.0;
    int iter = 0;
    bool done = interval.ods.empty();
    while (!done) {
      ++iter;
      costs = costs_of(section_flows(net, interval, slice.trips, slice.duration_s));
      gap = 0.0;
      std::vector<std::vector<double>> target;
      for (std::size_t i = 0; i < interval.ods.size(); ++i) {
        const auto& od = interval.ods[i];
        auto p = model.probabilities(net, od.paths, path_costs(od.paths, costs));
        double tv = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] - od.shares[k]);
        gap += demand_of[i] * 0.5 * tv;
        target.push_back(std::move(p));
      }
      gap /= total;
      if (static_cast<int>(result.gap_history.size()) < iter) result.gap_history.push_back(gap);
      else result.gap_history[iter - 1] = std::max(result.gap_history[iter - 1], gap);
      if (gap < gap_tolerance || iter >= max_iterations) {
        done = true;
        if (gap >= gap_tolerance) result.converged = false;
        break;
      }
      const double weight = 1.0 / static_cast<double>(iter + 1);
      for (std::size_t i = 0; i < interval.ods.size(); ++i) {
        auto& shares = interval.ods[i].shares;
        for (std::size_t k = 0; k < shares.size(); ++k) shares[k] += weight * (target[i][k] - shares[k]);
      }
    }
    result.iterations = std::max(result.iterations, iter);
    result.final_gap = std::max(result.final_gap, gap);
    result.plan.intervals.push_back(std::move(interval));
  }
  return result;
}

}  // namespace shuttlesim
