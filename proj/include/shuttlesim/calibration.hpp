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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shuttlesim/behavior.hpp"
#include "shuttlesim/demand.hpp"
#include "shuttlesim/engine.hpp"
#include "shuttlesim/network.hpp"
#include "shuttlesim/route_choice.hpp"

namespace shuttlesim {

/// Field-data trip conditions.
enum class Condition { kFree, kFollowingShuttle, kShuttle };
std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

struct TrajectoryPoint {
  double t_s = 0.0;
  std::string section;
  double offset_m = 0.0;
  double speed_mps = 0.0;
  bool excluded = false;  // unscheduled stop, ignored in travel times
};

struct TrajectoryLog {
  VehicleClass cls = VehicleClass::kHdv;
  std::string route;
  Condition condition = Condition::kFree;
  std::string trip;
  std::vector<TrajectoryPoint> samples;

  /// Throws std::invalid_argument unless samples are 1 s apart and strictly
  /// increasing, and class matches condition.
  void validate() const;
};

/// A measured stretch: one or more consecutive sections.
struct Segment {
  std::string id;
  std::vector<Index> sections;
};

/// Every section of every segment group, one segment per section.
std::vector<Segment> section_segments(const Network& net, const std::vector<std::string>& group_names);

struct SegmentObservation {
  std::string segment;
  Condition condition = Condition::kFree;
  double mean_s = 0.0;
  int trips = 0;
};

struct SegmentTimes {
  std::vector<SegmentObservation> observations;                // sorted by (segment order, condition)
  std::vector<std::pair<std::string, Condition>> missing;      // never traversed
};

/// Mean traversal time per segment and condition. Entry and exit are
/// interpolated between samples; flagged sample intervals are subtracted.
SegmentTimes segment_travel_times(const std::vector<TrajectoryLog>& logs, const Network& net,
                                  const std::vector<Segment>& segments);

/// 100 x mean(|obs - sim| / obs). Throws std::invalid_argument on size
/// mismatch, empty input or a non-positive observation.
double mape(const std::vector<double>& observed, const std::vector<double>& simulated);

struct ValidationResult {
  std::vector<std::optional<double>> ape;  // absent where the simulation had no data
  double mape = 0.0;
  int used = 0;
};

/// Per-segment absolute percentage error; MAPE over segments with data.
ValidationResult validate_following(const std::vector<double>& observed,
                                    const std::vector<std::optional<double>>& simulated);

/// GEH statistic for hourly counts; symmetric, 0 when both are zero.
double geh(double simulated, double observed);

struct GehSummary {
  std::vector<double> values;
  double below5 = 0.0;   // fraction of detectors
  double below10 = 0.0;
  double sum_squares = 0.0;
};

GehSummary geh_summary(const std::vector<double>& simulated, const std::vector<double>& observed);

/// Cartesian grid over named parameters. Distributed fields set the mean and
/// widen [min, max] if needed; fixed fields are set outright.
struct ParamAxis {
  std::string field;  // e.g. "hdv.speed_acceptance", "shuttle.max_speed_mph"
  std::vector<double> values;
};

struct ParamGrid {
  std::vector<ParamAxis> axes;

  std::size_t size() const;
  std::vector<double> point(std::size_t index) const;
  /// Throws std::invalid_argument for an empty grid, unknown field or an
  /// implausible value.
  void validate() const;
  /// Parameters at a grid point, starting from the given bases.
  std::pair<VehicleClassParams, VehicleClassParams> apply(std::size_t index, const VehicleClassParams& hdv,
                                                          const VehicleClassParams& shuttle) const;
};

/// Sets one named field. Throws std::invalid_argument on unknown names.
void set_param(VehicleClassParams& hdv, VehicleClassParams& shuttle, const std::string& field, double value);
std::vector<std::string> param_fields();

/// Scripted field-test replica: free-flow HDV trips, shuttle trips and HDV
/// trips starting right behind the shuttle, all along `path`.
struct CalibrationDesign {
  std::vector<Index> path;
  std::optional<std::string> shuttle_route;  // stops served by the shuttle
  std::vector<Segment> segments;
  int trips = 3;
  double spacing_s = 1200.0;
  double shuttle_delay_s = 150.0;
  double follower_gap_s = 2.0;
  double entry_speed_mps = 0.0;
};

/// Design along a transit route, one segment per grouped section.
CalibrationDesign route_design(const Network& net, const std::string& route);

/// Runs the design and returns one 1 Hz log per scripted trip.
std::vector<TrajectoryLog> simulate_conditions(const Network& net, const VehicleClassParams& hdv,
                                               const VehicleClassParams& shuttle, const CalibrationDesign& design,
                                               std::uint64_t seed);

struct GridScore {
  std::size_t index = 0;
  std::vector<double> values;
  bool ok = false;
  std::string error;
  double mape_free = 0.0;
  double mape_following = 0.0;
  double mape_shuttle = 0.0;
  double calibration_mape = 0.0;  // free-flow HDV and shuttle segments pooled
};

struct GridResult {
  std::size_t best = 0;
  VehicleClassParams hdv;
  VehicleClassParams shuttle;
  std::vector<GridScore> table;  // grid order
};

/// Exhaustive search; ties go to the lower grid index. Failing points are
/// recorded and skipped. Throws std::invalid_argument when every point fails.
GridResult grid_search_vehicle_params(const ParamGrid& grid, const Network& net, const SegmentTimes& observed,
                                      const CalibrationDesign& design, const VehicleClassParams& hdv_base,
                                      const VehicleClassParams& shuttle_base, int replications, std::uint64_t seed,
                                      unsigned threads = 0);

/// Hourly counts per detector for an OD matrix.
using CountEvaluator = std::function<std::vector<double>(const OdMatrix&)>;

/// Linear evaluator: trips spread over plan path shares, counted on every
/// detector whose section a path uses. Shares come from `plan`'s first
/// interval.
CountEvaluator assignment_count_evaluator(const Network& net, const AssignmentPlan& plan,
                                          const std::vector<Index>& detectors);

struct OdAdjustOptions {
  double bound = 0.5;       // cells stay within seed x [1 - bound, 1 + bound]
  int iterations = 400;
  double penalty = 1.0;     // weight of sum((cell/seed - 1)^2)
  double step = 0.1;        // initial factor step
  double perturbation = 0.05;
  std::uint64_t seed = 1;
};

struct OdAdjustResult {
  OdMatrix matrix;
  GehSummary before;
  GehSummary after;
  std::vector<double> objective;  // initial value, then every accepted iterate
  int accepted = 0;
  bool improved = false;
  std::string diagnostics;
};

/// Bounded multiplicative OD adjustment with simultaneous-perturbation
/// gradient estimates. Only improving steps are kept.
OdAdjustResult adjust_od(const OdMatrix& seed, const std::vector<double>& observed, const CountEvaluator& evaluate,
                         const OdAdjustOptions& options = {});

}  // namespace shuttlesim
