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

#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/io.hpp"
#include "support.hpp"

namespace shuttlesim {
namespace {

TEST(Params, RoundTrip) {
  auto hdv = VehicleClassParams::hdv();
  auto shuttle = VehicleClassParams::shuttle();
  hdv.max_accel.mean = 4.4;
  shuttle.stay_in_overtaking_lane = true;
  const auto [h, s] = io::params_from_json(io::params_to_json(hdv, shuttle));
  EXPECT_EQ(h.max_accel, hdv.max_accel);
  EXPECT_EQ(h.max_speed_mps, units::kInfinity);
  EXPECT_NEAR(s.max_speed_mps, shuttle.max_speed_mps, 1e-12);
  EXPECT_TRUE(s.stay_in_overtaking_lane);
  EXPECT_EQ(s.sensitivity, shuttle.sensitivity);
}

TEST(Params, MissingFieldsFallBackAndNumbersAreFixed) {
  const auto j = io::json::parse(R"({"hdv": {"speed_acceptance": 1.1}, "shuttle": {"max_speed_mph": 12}})");
  const auto [h, s] = io::params_from_json(j);
  EXPECT_EQ(h.speed_acceptance, ParamDist::fixed(1.1));
  EXPECT_EQ(h.max_accel, VehicleClassParams::hdv().max_accel);
  EXPECT_NEAR(s.max_speed_mps, units::mph(12.0), 1e-12);
  EXPECT_THROW(io::params_from_json(io::json::parse(R"({"hdv": {"length_m": "long"}})")), std::invalid_argument);
}

TEST(Demand, RoundTripAndShapeChecks) {
  const auto fx = corridor_fixture();
  io::DemandFile d{fx.offpeak, fx.peak};
  const auto back = io::demand_from_json(io::demand_to_json(d));
  EXPECT_EQ(back.offpeak.trips, fx.offpeak.trips);
  ASSERT_TRUE(back.peak.has_value());
  EXPECT_EQ(back.peak->centroids, fx.peak.centroids);
  EXPECT_THROW(io::demand_from_json(io::json::parse(R"({"centroids": ["a", "b"], "off-peak": [[0, 1]]})")),
               std::invalid_argument);
}

TEST(Plan, RoundTrip) {
  const auto fx = corridor_fixture();
  const Network net = Network::build(fx.network);
  const auto plan =
      iterate_assignment(net, DemandProfile::uniform(fx.peak, 1800.0), ChoiceModel::clogit(), 3, 1e-3).plan;
  const auto back = io::plan_from_json(io::plan_to_json(plan, net), net);
  EXPECT_EQ(back.fixed_fraction, plan.fixed_fraction);
  EXPECT_EQ(back.model.kind, ChoiceModelKind::kCLogit);
  ASSERT_EQ(back.intervals.size(), plan.intervals.size());
  for (std::size_t i = 0; i < plan.intervals.size(); ++i) {
    ASSERT_EQ(back.intervals[i].ods.size(), plan.intervals[i].ods.size());
    for (std::size_t k = 0; k < plan.intervals[i].ods.size(); ++k) {
      EXPECT_EQ(back.intervals[i].ods[k].paths[0].sections, plan.intervals[i].ods[k].paths[0].sections);
      EXPECT_NEAR(back.intervals[i].ods[k].shares[0], plan.intervals[i].ods[k].shares[0], 1e-12);
    }
  }
}

TEST(TrajectoryLogs, RoundTripAndErrors) {
  TrajectoryLog a;
  a.trip = "t1";
  a.route = "R1";
  a.condition = Condition::kShuttle;
  a.cls = VehicleClass::kShuttle;
  a.samples = {{0.0, "s1", 1.5, 2.0, false}, {1.0, "s1", 3.5, 2.0, true}};
  TrajectoryLog b = a;
  b.trip = "t2";
  b.condition = Condition::kFollowingShuttle;
  b.cls = VehicleClass::kHdv;
  const auto back = io::parse_trajectory_logs(io::trajectory_logs_text({a, b}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].trip, "t1");
  EXPECT_EQ(back[0].cls, VehicleClass::kShuttle);
  EXPECT_EQ(back[1].condition, Condition::kFollowingShuttle);
  ASSERT_EQ(back[0].samples.size(), 2u);
  EXPECT_TRUE(back[0].samples[1].excluded);
  EXPECT_DOUBLE_EQ(back[0].samples[1].offset_m, 3.5);
  EXPECT_THROW(io::parse_trajectory_logs("0,s1,1,1\n"), std::invalid_argument);
  EXPECT_THROW(io::parse_trajectory_logs("# trip: x\n0,s1,abc,1\n"), std::invalid_argument);
}

TEST(DetectorObservations, HourlyFlows) {
  const std::vector<io::DetectorObservation> obs{{"d1", 0, 30}, {"d1", 300, 50}, {"d2", 0, 10}};
  const auto back = io::parse_detector_observations(io::detector_observations_csv(obs));
  ASSERT_EQ(back.size(), 3u);
  const auto flows = io::hourly_flows(back, 300.0);
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].first, "d1");
  EXPECT_DOUBLE_EQ(flows[0].second, 40.0 * 12.0);
  EXPECT_DOUBLE_EQ(flows[1].second, 120.0);
  EXPECT_THROW(io::parse_detector_observations("detector_id,bin_start_s,count\nd1,0,-3\n"), std::invalid_argument);
}

TEST(Files, MissingFileNamesThePath) {
  try {
    io::read_file("/nonexistent/net.json");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/net.json"), std::string::npos);
  }
}

TEST(Provenance, HashAndHeader) {
  EXPECT_EQ(io::hex64(io::fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(io::hex64(io::fnv1a("a")), "af63dc4c8601ec8c");
  const io::Provenance p{"simulate", 7, {{"network", "abc"}}};
  const std::string h = io::provenance_header(p);
  std::size_t pos = 0;
  while (pos < h.size()) {
    EXPECT_EQ(h.compare(pos, 2, "# "), 0);
    pos = h.find('\n', pos) + 1;
    if (pos == 0) break;
  }
  EXPECT_EQ(io::provenance_json(p)["seed"], 7);
}

}  // namespace
}  // namespace shuttlesim
