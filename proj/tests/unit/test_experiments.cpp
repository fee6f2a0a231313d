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

#include "shuttlesim/experiments.hpp"
#include "shuttlesim/fixtures.hpp"

namespace shuttlesim {
namespace {

Traversal hdv_traversal(double tt, double ideal, double distance_m = 0.0) {
  Traversal t;
  t.cls = VehicleClass::kHdv;
  t.entry_s = 100.0;
  t.exit_s = 100.0 + tt;
  t.ideal_s = ideal;
  t.distance_m = distance_m;
  return t;
}

TEST(DelayRatio, Example) {
  EXPECT_NEAR(*delay_ratio({hdv_traversal(100.0, 90.0)}), 10.0, 1e-12);
  // Faster than ideal contributes no negative delay.
  EXPECT_NEAR(*delay_ratio({hdv_traversal(100.0, 90.0), hdv_traversal(100.0, 120.0)}), 5.0, 1e-12);
}

TEST(DelayRatio, IgnoresShuttlesAndNeedsHdvs) {
  auto s = hdv_traversal(500.0, 100.0);
  s.cls = VehicleClass::kShuttle;
  EXPECT_FALSE(delay_ratio({s}).has_value());
  EXPECT_NEAR(*delay_ratio({s, hdv_traversal(100.0, 100.0)}), 0.0, 1e-12);
}

TEST(WeightedSpeed, DistanceOverTime) {
  EXPECT_NEAR(*weighted_speed({hdv_traversal(144.0, 0.0, units::miles(1.0))}), 25.0, 1e-9);
  // Weighted by time, not the mean of the two speeds (25 and 23.08).
  EXPECT_NEAR(*weighted_speed({hdv_traversal(144.0, 0.0, units::miles(1.0)),
                               hdv_traversal(156.0, 0.0, units::miles(1.0))}),
              24.0, 1e-9);
  EXPECT_FALSE(weighted_speed({}).has_value());
}

TEST(Scenarios, StandardSet) {
  const auto s = standard_scenarios();
  ASSERT_EQ(s.size(), 5u);
  EXPECT_FALSE(s[0].headway_min.has_value());
  EXPECT_EQ(*s[1].headway_min, 30.0);
  EXPECT_EQ(*s[2].headway_min, 20.0);
  EXPECT_EQ(*s[3].headway_min, 10.0);
  EXPECT_EQ(*s[4].headway_min, 10.0);
  EXPECT_EQ(*s[4].speed_mph, 15.0);
  EXPECT_THROW(scenario_by_id("S9"), std::invalid_argument);
  EXPECT_THROW((Scenario{"X", -5.0, std::nullopt}.validate()), std::invalid_argument);
  EXPECT_EQ(period_from_string(to_string(Period::kPeak)), Period::kPeak);
  EXPECT_THROW(period_from_string("noon"), std::invalid_argument);
}

class CorridorExperiment : public ::testing::Test {
 protected:
  void SetUp() override {
    fx_ = corridor_fixture();
    net_ = std::make_unique<Network>(Network::build(fx_.network));
    setup_.net = net_.get();
    setup_.offpeak = fx_.offpeak;
    setup_.peak = fx_.peak;
    setup_.shuttle_routes = fx_.shuttle_routes;
    setup_.config.record_trajectories = false;
  }
  Fixture fx_;
  std::unique_ptr<Network> net_;
  ExperimentSetup setup_;
};

TEST_F(CorridorExperiment, MoreFrequentServiceMeansMoreDelay) {
  const auto report = run_matrix(setup_, {scenario_by_id("S0"), scenario_by_id("S1"), scenario_by_id("S3")},
                                 {Period::kOffPeak}, 3, 1);
  const double s0 = *report.find("S0", Period::kOffPeak)->aggregated.ratio;
  const double s1 = *report.find("S1", Period::kOffPeak)->aggregated.ratio;
  const double s3 = *report.find("S3", Period::kOffPeak)->aggregated.ratio;
  EXPECT_LE(s0, s1);
  EXPECT_LE(s1, s3);
  const auto* cell = report.find("S3", Period::kOffPeak);
  ASSERT_EQ(cell->replications.size(), 3u);
  EXPECT_EQ(cell->groups.size(), net_->segment_groups().size());
  EXPECT_EQ(report.find("S2", Period::kOffPeak), nullptr);
}

TEST_F(CorridorExperiment, MatrixIsReproducible) {
  setup_.config.duration_s = 900.0;
  const auto a = run_matrix(setup_, {scenario_by_id("S3")}, {Period::kPeak}, 2, 7);
  const auto b = run_matrix(setup_, {scenario_by_id("S3")}, {Period::kPeak}, 2, 7, 1);
  EXPECT_EQ(format_report_csv(a), format_report_csv(b));
  const std::string table = format_report_table(a);
  EXPECT_NE(table.find("Aggregated"), std::string::npos);
  EXPECT_NE(table.find("S3"), std::string::npos);
}

TEST_F(CorridorExperiment, TuningStopsAtTheCap) {
  setup_.config.duration_s = 600.0;
  setup_.config.warmup_s = 300.0;
  TuneOptions opt;
  opt.start_mph = 25.0;  // already the route limit
  const auto r = tune_shuttle_speed(setup_, Period::kOffPeak, -100.0, opt, 1, 3);
  ASSERT_EQ(r.attempts.size(), 1u);
  EXPECT_FALSE(r.within);
  EXPECT_DOUBLE_EQ(r.speed_mph, 25.0);
}

TEST_F(CorridorExperiment, TuningReturnsFirstSpeedWithinEpsilon) {
  setup_.config.duration_s = 600.0;
  setup_.config.warmup_s = 300.0;
  TuneOptions opt;
  opt.epsilon = 1e6;  // any attempt qualifies
  const auto r = tune_shuttle_speed(setup_, Period::kOffPeak, 0.0, opt, 1, 3);
  ASSERT_EQ(r.attempts.size(), 1u);
  EXPECT_TRUE(r.within);
  EXPECT_DOUBLE_EQ(r.speed_mph, 9.5);
}

}  // namespace
}  // namespace shuttlesim
