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

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shuttlesim/demand.hpp"
#include "shuttlesim/network.hpp"

namespace shuttlesim {

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Path {
  std::vector<Index> sections;
  double length_m = 0.0;
  double cost = 0.0;
  bool operator==(const Path&) const = default;
};

/// Free-flow traversal time (length / limit) of every section.
std::vector<double> free_flow_costs(const Network& net);

/// Up to k node-loopless paths from any origin section to any destination
/// section, in non-decreasing cost (Yen). Path cost is the sum of the costs of
/// all its sections. Throws RoutingError when no path exists.
std::vector<Path> k_shortest_paths(const Network& net, const std::vector<Index>& origins,
                                   const std::vector<Index>& destinations, std::size_t k,
                                   const std::vector<double>& section_cost);
/// Centroid form: origins are the origin centroid's outgoing connectors,
/// destinations the destination centroid's incoming connectors.
std::vector<Path> k_shortest_paths(const Network& net, Index origin_centroid, Index destination_centroid,
                                   std::size_t k, const std::vector<double>& section_cost);

/// P_k proportional to exp(-scale * c_k / c_min).
std::vector<double> logit_probabilities(std::span<const double> costs, double scale);

/// C-logit: commonality CF_k = beta * ln sum_l (L_kl / sqrt(L_k L_l))^gamma
/// subtracted from the logit utility.
std::vector<double> clogit_probabilities(const std::vector<std::vector<double>>& overlap_m,
                                         std::span<const double> lengths_m, std::span<const double> costs,
                                         double scale, double beta, double gamma);

/// Shared length of every pair of paths (diagonal = path length).
std::vector<std::vector<double>> overlap_matrix(const Network& net, const std::vector<Path>& paths);

enum class ChoiceModelKind { kLogit, kCLogit };

struct ChoiceModel {
  ChoiceModelKind kind = ChoiceModelKind::kLogit;
  double scale = 12.0;
  double beta = 0.1;
  double gamma = 1.0;

  static ChoiceModel logit(double scale = 12.0) { return {ChoiceModelKind::kLogit, scale, 0.0, 1.0}; }
  static ChoiceModel clogit(double scale = 12.0, double beta = 0.1, double gamma = 1.0) {
    return {ChoiceModelKind::kCLogit, scale, beta, gamma};
  }
  /// Choice probabilities over `paths` given per-path costs.
  std::vector<double> probabilities(const Network& net, const std::vector<Path>& paths,
                                    std::span<const double> costs) const;
};

/// Paths and current choice probabilities of one OD pair.
struct PathSet {
  std::string origin;
  std::string destination;
  std::vector<Path> paths;
  std::vector<double> probabilities;
};

struct OdPlan {
  std::string origin;
  std::string destination;
  std::vector<Path> paths;
  std::vector<double> shares;
};

struct IntervalPlan {
  double start_s = 0.0;
  double duration_s = 900.0;
  std::vector<OdPlan> ods;
};

/// Path shares per departure interval and OD pair. A `fixed_fraction` of
/// trips is bound to a sampled path; the rest re-choose at departure using
/// the costs current at that time.
struct AssignmentPlan {
  double fixed_fraction = 0.70;
  ChoiceModel model;
  std::vector<IntervalPlan> intervals;

  /// Plan entry for a departure at time t (last interval covers later times).
  const OdPlan* find(double t, const std::string& origin, const std::string& destination) const;
  /// Throws std::invalid_argument when shares are not a distribution.
  void validate() const;
};

struct AssignmentResult {
  AssignmentPlan plan;
  int iterations = 0;
  double final_gap = 0.0;
  bool converged = false;
  std::vector<double> gap_history;  // worst interval gap per iteration
};

/// Maps section flows (veh/h) to section costs (s).
using CostFunction = std::function<std::vector<double>(const std::vector<double>& section_flow_vph)>;

/// BPR volume-delay on free-flow time: t0 (1 + alpha (v/c)^beta), capacity
/// per lane scaled by the green ratio of signalized exits.
CostFunction bpr_costs(const Network& net, double alpha = 0.15, double beta = 4.0,
                       double capacity_per_lane_vph = 1800.0);

/// Method of successive averages on stochastic route choice: costs from
/// current flows, choice probabilities from costs, shares averaged with weight
/// 1/n. The convergence gap is the demand-weighted total-variation distance
/// between current shares and the probabilities implied by current costs.
AssignmentResult iterate_assignment(const Network& net, const DemandProfile& demand, const ChoiceModel& model,
                                    int max_iterations, double gap_tolerance, const CostFunction& cost_fn = {},
                                    std::size_t max_paths = 3, double fixed_fraction = 0.70);

/// Section flows (veh/h) implied by a plan for one interval's demand.
std::vector<double> section_flows(const Network& net, const IntervalPlan& interval, const OdMatrix& trips,
                                  double duration_s);

}  // namespace shuttlesim
