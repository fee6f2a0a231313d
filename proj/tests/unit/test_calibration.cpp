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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "shuttlesim/calibration.hpp"
#include "shuttlesim/fixtures.hpp"
#include "support.hpp"

namespace shuttlesim {
namespace {

using testing::Gen;
using testing::line_network;

// 1 Hz log along in(100) -> s1(500) -> s2(500) -> out(100), position given
// as distance from the start of "in".
TrajectoryLog line_log(const std::function<double(double)>& x, double t_end, Condition cond = Condition::kFree,
                       std::pair<double, double> excluded = {-1, -1}) {
  TrajectoryLog log;
  log.condition = cond;
  log.cls = cond == Condition::kShuttle ? VehicleClass::kShuttle : VehicleClass::kHdv;
  log.trip = "t";
  const std::vector<std::pair<std::string, double>> secs{{"in", 100}, {"s1", 500}, {"s2", 500}, {"out", 100}};
  for (double t = 0.0; t <= t_end; t += 1.0) {
    double pos = std::clamp(x(t), 0.0, 1199.0);
    std::size_t i = 0;
    while (pos >= secs[i].second) pos -= secs[i++].second;
    const bool ex = t >= excluded.first && t < excluded.second;
    log.samples.push_back({t, secs[i].first, pos, 10.0, ex});
  }
  return log;
}

TEST(SegmentTravelTimes, InterpolatesCrossings) {
  const Network net = Network::build(line_network());
  const auto segs = section_segments(net, {});
  ASSERT_EQ(segs.size(), 2u);
  // Constant 10 m/s, entering s1 at t = 19.5 and leaving at t = 69.5.
  const auto st = segment_travel_times({line_log([](double t) { return 10 * t - 95; }, 130)}, net, segs);
  ASSERT_EQ(st.observations.size(), 2u);
  EXPECT_NEAR(st.observations[0].mean_s, 50.0, 1e-9);
  EXPECT_EQ(st.observations[0].trips, 1);
  EXPECT_TRUE(st.missing.empty());
}

TEST(SegmentTravelTimes, MeanOverLogsAndMissingConditions) {
  const Network net = Network::build(line_network());
  const Segment s1{"s1", {net.section_index("s1")}};
  const auto st = segment_travel_times({line_log([](double t) { return 10 * t; }, 130),
                                        line_log([](double t) { return 5 * t; }, 260)},
                                       net, {s1});
  ASSERT_EQ(st.observations.size(), 1u);
  EXPECT_NEAR(st.observations[0].mean_s, 75.0, 1e-9);
  EXPECT_EQ(st.observations[0].trips, 2);
}

TEST(SegmentTravelTimes, ExcludedIntervalsAreSubtracted) {
  const Network net = Network::build(line_network());
  const Segment s1{"s1", {net.section_index("s1")}};
  // 10 m/s to t = 30 (x = 300), stopped until t = 60, then 10 m/s again.
  auto x = [](double t) { return t < 30 ? 10 * t : t < 60 ? 300.0 : 300 + 10 * (t - 60); };
  const auto raw = segment_travel_times({line_log(x, 150)}, net, {s1});
  const auto net_of_stop = segment_travel_times({line_log(x, 150, Condition::kFree, {30, 60})}, net, {s1});
  EXPECT_NEAR(raw.observations[0].mean_s, 80.0, 1e-9);
  EXPECT_NEAR(net_of_stop.observations[0].mean_s, 50.0, 1e-9);
}

TEST(SegmentTravelTimes, UnvisitedSegmentIsMissing) {
  const Network net = Network::build(line_network());
  const Segment s2{"s2", {net.section_index("s2")}};
  const auto st = segment_travel_times({line_log([](double t) { return 10 * t; }, 40)}, net, {s2});
  EXPECT_TRUE(st.observations.empty());
  ASSERT_EQ(st.missing.size(), 1u);
  EXPECT_EQ(st.missing[0].first, "s2");
}

TEST(TrajectoryLog, ValidationRejectsIrregularSampling) {
  auto log = line_log([](double t) { return t; }, 10);
  EXPECT_NO_THROW(log.validate());
  log.samples[3].t_s = 3.5;
  EXPECT_THROW(log.validate(), std::invalid_argument);
  auto mismatch = line_log([](double t) { return t; }, 10);
  mismatch.cls = VehicleClass::kShuttle;
  EXPECT_THROW(mismatch.validate(), std::invalid_argument);
}

TEST(Conditions, RoundTrip) {
  for (auto c : {Condition::kFree, Condition::kFollowingShuttle, Condition::kShuttle})
    EXPECT_EQ(condition_from_string(to_string(c)), c);
  EXPECT_THROW(condition_from_string("platoon"), std::invalid_argument);
}

// ---------------------------------------------------------------- metrics

TEST(Mape, Example) {
  EXPECT_NEAR(mape({100.0, 200.0}, {110.0, 180.0}), 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(mape({50.0}, {50.0}), 0.0);
  EXPECT_THROW(mape({}, {}), std::invalid_argument);
  EXPECT_THROW(mape({1.0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(mape({0.0}, {1.0}), std::invalid_argument);
}

TEST(ValidateFollowing, SkipsSegmentsWithoutSimulatedData) {
  const auto r = validate_following({100.0, 50.0, 80.0}, {110.0, std::nullopt, 60.0});
  EXPECT_EQ(r.used, 2);
  EXPECT_FALSE(r.ape[1].has_value());
  EXPECT_NEAR(*r.ape[0], 10.0, 1e-12);
  EXPECT_NEAR(*r.ape[2], 25.0, 1e-12);
  EXPECT_NEAR(r.mape, 17.5, 1e-12);
}

TEST(Geh, Examples) {
  EXPECT_DOUBLE_EQ(geh(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(geh(100.0, 100.0), 0.0);
  EXPECT_NEAR(geh(150.0, 100.0), std::sqrt(20.0), 1e-12);
}

TEST(Geh, SymmetricNonNegativeAndGrowingWithError) {
  Gen g(5);
  for (int i = 0; i < 2000; ++i) {
    const double m = g.uniform(0, 3000), c = g.uniform(0, 3000), d = g.uniform(0, 200);
    ASSERT_GE(geh(m, c), 0.0);
    ASSERT_DOUBLE_EQ(geh(m, c), geh(c, m));
    ASSERT_LE(geh(c + d, c), geh(c + d + 10.0, c) + 1e-12);
  }
}

TEST(GehSummary, Fractions) {
  const auto s = geh_summary({100, 150, 400, 0}, {100, 100, 200, 0});
  EXPECT_DOUBLE_EQ(s.below5, 0.75);
  EXPECT_DOUBLE_EQ(s.below10, 0.75);
  EXPECT_NEAR(s.sum_squares, 20.0 + 2.0 * 200 * 200 / 600.0, 1e-9);
}

// ------------------------------------------------------------ parameters

TEST(ParamGrid, LastAxisVariesFastest) {
  ParamGrid g{{{"hdv.max_accel", {3, 4}}, {"hdv.speed_acceptance", {0.9, 1.0, 1.1}}}};
  g.validate();
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g.point(0), (std::vector<double>{3, 0.9}));
  EXPECT_EQ(g.point(1), (std::vector<double>{3, 1.0}));
  EXPECT_EQ(g.point(5), (std::vector<double>{4, 1.1}));
}

TEST(ParamGrid, RejectsUnknownOrImplausibleValues) {
  EXPECT_THROW((ParamGrid{{{"hdv.wheels", {4}}}}.validate()), std::invalid_argument);
  EXPECT_THROW((ParamGrid{{{"hdv.speed_acceptance", {7.0}}}}.validate()), std::invalid_argument);
  EXPECT_THROW(ParamGrid{}.validate(), std::invalid_argument);
}

TEST(SetParam, DistributedMeanWidensBoundsAndFixedStaysFixed) {
  auto h = VehicleClassParams::hdv();
  auto s = VehicleClassParams::shuttle();
  set_param(h, s, "hdv.max_accel", 6.5);
  EXPECT_DOUBLE_EQ(h.max_accel.mean, 6.5);
  EXPECT_GE(h.max_accel.max, 6.5);
  h.validate();
  set_param(h, s, "shuttle.max_accel", 2.0);
  EXPECT_EQ(s.max_accel, ParamDist::fixed(2.0));
  set_param(h, s, "shuttle.max_speed_mph", 12.0);
  EXPECT_NEAR(s.max_speed_mps, units::mph(12.0), 1e-12);
  EXPECT_THROW(set_param(h, s, "bus.max_accel", 1.0), std::invalid_argument);
  for (const auto& f : param_fields()) EXPECT_NO_THROW(set_param(h, s, f, 2.0)) << f;
}

// ------------------------------------------------------------ grid search

struct CorridorCase {
  Network net = Network::build(corridor_fixture().network);
  CalibrationDesign design = [this] {
    auto d = route_design(net, net.transit_routes()[0].id);
    d.trips = 1;
    return d;
  }();
  VehicleClassParams hdv = [] {
    auto p = VehicleClassParams::hdv();
    p.speed_acceptance = ParamDist::fixed(1.0);
    return p;
  }();
  VehicleClassParams shuttle = VehicleClassParams::shuttle();

  SegmentTimes observed_at(double acceptance) {
    auto h = hdv;
    set_param(h, shuttle, "hdv.speed_acceptance", acceptance);
    return segment_travel_times(simulate_conditions(net, h, shuttle, design, 99), net, design.segments);
  }
};

TEST(GridSearch, SinglePointGridReturnsIt) {
  CorridorCase c;
  const ParamGrid grid{{{"hdv.speed_acceptance", {1.05}}}};
  const auto r = grid_search_vehicle_params(grid, c.net, c.observed_at(1.0), c.design, c.hdv, c.shuttle, 1, 99, 1);
  EXPECT_EQ(r.best, 0u);
  EXPECT_DOUBLE_EQ(r.hdv.speed_acceptance.mean, 1.05);
  ASSERT_EQ(r.table.size(), 1u);
  EXPECT_TRUE(r.table[0].ok);
}

TEST(GridSearch, RecoversPlantedPointAndNearestNeighbour) {
  CorridorCase c;
  const ParamGrid grid{{{"hdv.speed_acceptance", {0.9, 1.0, 1.1}}}};
  const auto exact = grid_search_vehicle_params(grid, c.net, c.observed_at(1.1), c.design, c.hdv, c.shuttle, 1, 99, 1);
  EXPECT_EQ(exact.best, 2u);
  EXPECT_NEAR(exact.table[2].calibration_mape, 0.0, 1e-9);
  const auto near = grid_search_vehicle_params(grid, c.net, c.observed_at(1.03), c.design, c.hdv, c.shuttle, 1, 99, 1);
  EXPECT_EQ(near.best, 1u);
}

TEST(RouteDesign, UnknownRouteThrows) {
  CorridorCase c;
  EXPECT_THROW(route_design(c.net, "nope"), std::exception);
  EXPECT_FALSE(c.design.segments.empty());
}

// ----------------------------------------------------------- OD adjustment

CountEvaluator identity_counts() {
  return [](const OdMatrix& m) {
    std::vector<double> out;
    for (double t : m.trips) out.push_back(t);
    return out;
  };
}

TEST(AdjustOd, MatchedCountsLeaveTheMatrixAlone) {
  OdMatrix m({"a", "b"});
  m(0, 1) = 300.0;
  m(1, 0) = 200.0;
  const auto r = adjust_od(m, {0.0, 300.0, 200.0, 0.0}, identity_counts());
  EXPECT_FALSE(r.improved);
  EXPECT_EQ(r.matrix.trips, m.trips);
  EXPECT_FALSE(r.diagnostics.empty());
}

TEST(AdjustOd, OneCellMovesTowardsTheCount) {
  OdMatrix m({"a", "b"});
  m(0, 1) = 400.0;
  OdAdjustOptions opt;
  opt.penalty = 0.0;
  const auto r = adjust_od(m, {0.0, 480.0, 0.0, 0.0}, identity_counts(), opt);
  EXPECT_TRUE(r.improved);
  EXPECT_NEAR(r.matrix(0, 1), 480.0, 5.0);
  EXPECT_LT(r.after.sum_squares, r.before.sum_squares);
}

TEST(AdjustOd, ObjectiveNeverRisesAndFactorsStayInBounds) {
  Gen g(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(2, 4);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("z" + std::to_string(i));
    OdMatrix m(ids);
    for (int o = 0; o < n; ++o)
      for (int d = 0; d < n; ++d)
        if (o != d) m(o, d) = g.uniform(50, 500);
    // Counts far outside the reachable range push factors to the bound.
    std::vector<double> observed;
    for (double t : m.trips) observed.push_back(t * g.uniform(0.1, 3.0));
    OdAdjustOptions opt;
    opt.bound = 0.4;
    opt.iterations = 100;
    opt.seed = trial;
    const auto r = adjust_od(m, observed, identity_counts(), opt);
    for (std::size_t k = 1; k < r.objective.size(); ++k) ASSERT_LE(r.objective[k], r.objective[k - 1] + 1e-9);
    for (std::size_t i = 0; i < m.trips.size(); ++i) {
      ASSERT_GE(r.matrix.trips[i], m.trips[i] * 0.6 - 1e-9);
      ASSERT_LE(r.matrix.trips[i], m.trips[i] * 1.4 + 1e-9);
    }
  }
}

TEST(AssignmentCountEvaluator, CountsDetectorsOnUsedSections) {
  const Network net = Network::build(line_network());
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = 600.0;
  const auto plan = iterate_assignment(net, DemandProfile::uniform(m, 3600.0), ChoiceModel::logit(), 5, 1e-6).plan;
  const auto eval = assignment_count_evaluator(net, plan, {0, 1});
  const auto counts = eval(m);
  ASSERT_EQ(counts.size(), 2u);
  EXPECT_NEAR(counts[0], 600.0, 1e-9);
  EXPECT_NEAR(counts[1], 600.0, 1e-9);
}

}  // namespace
}  // namespace shuttlesim
