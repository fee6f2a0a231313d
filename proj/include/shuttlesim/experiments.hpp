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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shuttlesim/engine.hpp"

namespace shuttlesim {

enum class Period { kOffPeak, kPeak };

std::string_view to_string(Period p);
/// Accepts "off-peak" and "peak". Throws std::invalid_argument.
Period period_from_string(std::string_view s);

struct Scenario {
  std::string id;
  std::optional<double> headway_min;  // none: no shuttle service
  std::optional<double> speed_mph;    // shuttle speed cap override

  /// Throws std::invalid_argument.
  void validate() const;
};

/// S0 (no shuttle), S1/S2/S3 (30/20/10 min headway at the class speed) and S4
/// (S3's headway with a 15 mph cap until tuned).
std::vector<Scenario> standard_scenarios();
Scenario scenario_by_id(const std::string& id);

/// Percent of HDV travel time spent above each traversal's ideal time.
/// Empty when no HDV traversal exists.
std::optional<double> delay_ratio(const std::vector<Traversal>& traversals);
/// Total HDV distance over total HDV time, in mph. Empty without traversals.
std::optional<double> weighted_speed(const std::vector<Traversal>& traversals);

/// Everything a scenario run needs besides the scenario itself.
struct ExperimentSetup {
  const Network* net = nullptr;
  VehicleClassParams hdv = VehicleClassParams::hdv();
  VehicleClassParams shuttle = VehicleClassParams::shuttle();
  OdMatrix offpeak;  // trips per hour
  OdMatrix peak;
  std::vector<std::string> shuttle_routes;
  SimConfig config;
  YieldRule yield;
  int assignment_iterations = 10;

  const OdMatrix& demand(Period p) const { return p == Period::kPeak ? peak : offpeak; }
};

struct GroupMetrics {
  std::optional<double> ratio;
  std::optional<double> speed_mph;
  std::size_t traversals = 0;
};

struct ReplicationMetrics {
  std::uint64_t seed = 0;
  std::vector<GroupMetrics> groups;  // network group order
  GroupMetrics aggregated;           // traversals pooled over all groups
};

struct CellResult {
  std::string scenario;
  Period period = Period::kOffPeak;
  std::optional<double> shuttle_speed_mph;
  std::vector<GroupMetrics> groups;  // mean over replications
  GroupMetrics aggregated;
  std::vector<ReplicationMetrics> replications;
};

struct TuningResult {
  Period period = Period::kOffPeak;
  double target_ratio = 0.0;
  double speed_mph = 0.0;
  double ratio = 0.0;
  bool within = false;  // false: best attempt, target not reached under the cap
  std::vector<std::pair<double, double>> attempts;  // (speed mph, aggregated ratio)
  CellResult cell;
};

struct MetricsReport {
  std::vector<std::string> groups;
  std::vector<CellResult> cells;
  std::vector<TuningResult> tuning;

  const CellResult* find(const std::string& scenario, Period period) const;
};

/// Plan for a period: offpeak uses logit, peak C-logit, both iterated on BPR
/// costs.
AssignmentPlan period_plan(const ExperimentSetup& setup, Period period);

/// Runs one replication and scores it.
ReplicationMetrics run_replication(const ExperimentSetup& setup, const Scenario& scenario, Period period,
                                   const AssignmentPlan& plan, std::uint64_t seed);

/// Replication r uses seed + r. Cells run concurrently.
MetricsReport run_matrix(const ExperimentSetup& setup, const std::vector<Scenario>& scenarios,
                         const std::vector<Period>& periods, int replications, std::uint64_t seed,
                         unsigned threads = 0);

struct TuneOptions {
  double start_mph = 9.5;
  double step_mph = 2.5;
  double epsilon = 1.5;              // percentage points
  std::optional<double> max_speed_mph;  // the cap is max(route limit, this)
};

/// Raises S3's shuttle cap step by step until the aggregated ratio is within
/// epsilon of `target_ratio` or the cap is reached.
TuningResult tune_shuttle_speed(const ExperimentSetup& setup, Period period, double target_ratio,
                                const TuneOptions& options, int replications, std::uint64_t seed,
                                unsigned threads = 0);

/// Table layout: rows are groups plus "Aggregated", columns scenario x
/// {ratio, speed}, one block per period.
std::string format_report_table(const MetricsReport& report);
/// One row per (scenario, period, replication, group) with raw values.
std::string format_report_csv(const MetricsReport& report);

}  // namespace shuttlesim
