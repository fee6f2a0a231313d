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

#include <map>
#include <numeric>

#include "shuttlesim/engine.hpp"
#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/io.hpp"
#include "support.hpp"

namespace shuttlesim {
namespace {

using testing::line_network;

std::vector<Index> ids(const Network& net, std::initializer_list<const char*> names) {
  std::vector<Index> out;
  for (const char* n : names) out.push_back(net.section_index(n));
  return out;
}

// --------------------------------------------------------------- demand

TEST(InjectDemand, ZeroCellGivesNoArrivals) {
  OdMatrix m({"a", "b"});
  Rng rng = make_stream(1, 1);
  EXPECT_TRUE(inject_demand({0.0, 3600.0, m}, rng).empty());
}

TEST(InjectDemand, PoissonMoments) {
  OdMatrix m({"a", "b"});
  m(0, 1) = 360.0;
  std::vector<double> n;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng = make_stream(s, kStreamDemand);
    const auto a = inject_demand({0.0, 3600.0, m}, rng);
    for (std::size_t i = 1; i < a.size(); ++i) ASSERT_LE(a[i - 1].time_s, a[i].time_s);
    n.push_back(static_cast<double>(a.size()));
  }
  const double mean = std::accumulate(n.begin(), n.end(), 0.0) / n.size();
  double var = 0.0;
  for (double x : n) var += (x - mean) * (x - mean);
  var /= n.size() - 1;
  EXPECT_NEAR(mean, 360.0, 5.0);
  EXPECT_NEAR(var, 360.0, 110.0);
}

TEST(InjectDemand, ArrivalsAreAbsoluteTimesInsideTheSlice) {
  OdMatrix m({"a", "b"});
  m(0, 1) = 50.0;
  Rng rng = make_stream(3, 3);
  for (const auto& a : inject_demand({900.0, 900.0, m}, rng)) {
    EXPECT_GE(a.time_s, 900.0);
    EXPECT_LT(a.time_s, 1800.0);
  }
}

// ------------------------------------------------------------ dispatch

TEST(DispatchShuttles, Examples) {
  EXPECT_EQ(dispatch_shuttles(30.0, 3600.0), (std::vector<double>{0.0, 1800.0}));
  EXPECT_EQ(dispatch_shuttles(10.0, 3600.0).size(), 6u);
  EXPECT_THROW(dispatch_shuttles(0.0, 3600.0), std::invalid_argument);
}

// ----------------------------------------------------------------- step

TEST(Step, EmptyWorldStaysEmpty) {
  const Network net = Network::build(line_network());
  SimConfig cfg;
  cfg.duration_s = 60.0;
  cfg.warmup_s = 0.0;
  Simulation sim(net, SimInputs{}, cfg);
  for (int i = 0; i < 50; ++i) sim.step();
  EXPECT_TRUE(sim.snapshot().vehicles.empty());
  const auto out = sim.finish();
  EXPECT_TRUE(out.vehicles.empty());
  EXPECT_TRUE(out.trajectories.empty());
  EXPECT_TRUE(out.traversals.empty());
  for (const auto& c : out.detector_counts) EXPECT_EQ(c.count, 0);
}

TEST(Step, SingleVehicleAdvancesByVTimesStep) {
  const Network net = Network::build(line_network(2000.0));
  SimInputs in;
  in.scripted.push_back({0.0, VehicleClass::kHdv, ids(net, {"in", "s1", "s2", "out"}), std::nullopt, std::nullopt,
                         units::mph(25.0), "probe"});
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 200.0;
  Simulation sim(net, in, cfg);
  for (int i = 0; i < 300; ++i) sim.step();  // settle at the desired speed
  const auto a = sim.snapshot().vehicles.at(0);
  sim.step();
  const auto b = sim.snapshot().vehicles.at(0);
  ASSERT_EQ(a.section, b.section);
  EXPECT_NEAR(b.offset_m - a.offset_m, 0.5 * (a.speed_mps + b.speed_mps) * cfg.step_s, 1e-6);
  EXPECT_NEAR(b.speed_mps, a.desired_mps, 1e-6);
}

TEST(Step, HdvQueuesBehindDwellingShuttle) {
  const Network net = Network::build(corridor_fixture().network);
  const auto& route = net.transit_routes()[0];
  SimInputs in;
  in.scripted.push_back({0.0, VehicleClass::kShuttle, route.sections, std::nullopt, route.id, 0.0, "shuttle"});
  in.scripted.push_back({2.0, VehicleClass::kHdv, route.sections, std::nullopt, std::nullopt, 0.0, "hdv"});
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 1200.0;
  Simulation sim(net, in, cfg);
  bool queued_behind_dwell = false;
  while (!sim.finished()) {
    sim.step();
    const auto snap = sim.snapshot();
    if (snap.vehicles.size() != 2) continue;
    const auto& s = snap.vehicles[0].cls == VehicleClass::kShuttle ? snap.vehicles[0] : snap.vehicles[1];
    const auto& h = snap.vehicles[0].cls == VehicleClass::kShuttle ? snap.vehicles[1] : snap.vehicles[0];
    if (s.dwelling && h.speed_mps == 0.0 && h.section == s.section) queued_behind_dwell = true;
  }
  EXPECT_TRUE(queued_behind_dwell);
}

// ------------------------------------------------------------------ run

SimInputs corridor_inputs(const Fixture& fx, double horizon, std::optional<double> headway) {
  SimInputs in;
  in.demand = DemandProfile::uniform(fx.offpeak, horizon);
  if (headway)
    for (const auto& r : fx.shuttle_routes) in.shuttles.push_back({r, *headway, std::nullopt});
  return in;
}

TEST(Run, ZeroDemandGivesEmptyOutput) {
  const Network net = Network::build(corridor_fixture().network);
  SimConfig cfg;
  cfg.duration_s = 300.0;
  cfg.warmup_s = 0.0;
  const auto out = run(net, SimInputs{}, cfg);
  EXPECT_TRUE(out.vehicles.empty());
  EXPECT_TRUE(out.traversals.empty());
  EXPECT_EQ(out.stats.released, 0u);
}

TEST(Run, ShuttlesSlowTheCorridor) {
  const auto fx = corridor_fixture();
  const Network net = Network::build(fx.network);
  SimConfig cfg;
  cfg.seed = 4;
  cfg.record_trajectories = false;
  auto mean_tt = [&](const SimOutput& o) {
    double sum = 0.0;
    int n = 0;
    for (const auto& t : o.traversals)
      if (t.cls == VehicleClass::kHdv) sum += t.travel_time_s(), ++n;
    return sum / n;
  };
  const double s0 = mean_tt(run(net, corridor_inputs(fx, cfg.horizon_s(), std::nullopt), cfg));
  const double s3 = mean_tt(run(net, corridor_inputs(fx, cfg.horizon_s(), 10.0), cfg));
  EXPECT_GE(s3, s0);
}

TEST(Run, SameSeedIsBitIdentical) {
  const auto fx = corridor_fixture();
  const Network net = Network::build(fx.network);
  SimConfig cfg;
  cfg.duration_s = 900.0;
  cfg.seed = 17;
  const auto in = corridor_inputs(fx, cfg.horizon_s(), 10.0);
  const auto a = run(net, in, cfg);
  const auto b = run(net, in, cfg);
  EXPECT_EQ(io::trajectories_csv(a, net), io::trajectories_csv(b, net));
  EXPECT_EQ(io::detector_counts_csv(a, net), io::detector_counts_csv(b, net));
  EXPECT_EQ(io::traversals_csv(a, net), io::traversals_csv(b, net));
  cfg.seed = 18;
  const auto c = run(net, in, cfg);
  EXPECT_NE(io::trajectories_csv(a, net), io::trajectories_csv(c, net));
}

TEST(Run, ShuttleDeparturesKeepTheHeadway) {
  const auto fx = corridor_fixture();
  const Network net = Network::build(fx.network);
  SimConfig cfg;
  cfg.record_trajectories = false;
  const auto out = run(net, corridor_inputs(fx, cfg.horizon_s(), 10.0), cfg);
  std::vector<double> releases;
  for (const auto& v : out.vehicles)
    if (v.cls == VehicleClass::kShuttle) releases.push_back(v.release_s);
  ASSERT_EQ(releases.size(), 7u);  // 4200 s horizon at 10 min
  for (std::size_t i = 1; i < releases.size(); ++i) EXPECT_DOUBLE_EQ(releases[i] - releases[i - 1], 600.0);
}

TEST(Run, ShuttleRoundTripTakesRouteLengthOverCapPlusDwell) {
  const Network net = Network::build(corridor_fixture().network);
  const auto& route = net.transit_routes()[0];
  SimInputs in;
  in.scripted.push_back({0.0, VehicleClass::kShuttle, route.sections, std::nullopt, route.id, 0.0, "s"});
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 1500.0;
  const auto out = run(net, in, cfg);
  ASSERT_EQ(out.vehicles.size(), 1u);
  ASSERT_TRUE(out.vehicles[0].finished());
  const double cruise = route.length_m / units::mph(9.5);  // about 830 s
  const double dwell = 2 * 20.0;
  EXPECT_GE(out.vehicles[0].travel_time_s(), cruise + dwell);
  EXPECT_LE(out.vehicles[0].travel_time_s(), cruise + dwell + 60.0);
}

TEST(Run, BlockedEntryBuffersWithoutLoss) {
  const Network net = Network::build(line_network(300.0));
  SimInputs in;
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = 4000.0;  // beyond single-lane capacity
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 600.0;
  cfg.record_trajectories = false;
  in.demand = DemandProfile::uniform(m, cfg.horizon_s());
  Simulation sim(net, in, cfg);
  std::uint64_t max_queue = 0;
  while (!sim.finished()) {
    sim.step();
    const auto s = sim.snapshot().stats;
    ASSERT_EQ(s.released, s.queued + s.in_network + s.exited);
    ASSERT_EQ(s.entered, s.in_network + s.exited);
    max_queue = std::max(max_queue, s.queued);
  }
  EXPECT_GT(max_queue, 10u);
}

TEST(Run, DetectorCountsEqualBumperCrossings) {
  const Network net = Network::build(line_network(400.0));
  SimInputs in;
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = 600.0;
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 900.0;
  cfg.sample_interval_s = cfg.step_s;
  cfg.seed = 5;
  in.demand = DemandProfile::uniform(m, cfg.horizon_s());
  const auto out = run(net, in, cfg);
  std::map<Index, int> crossings;
  std::map<VehicleId, const TrajectorySample*> last;
  for (const auto& s : out.trajectories) {
    auto it = last.find(s.vehicle);
    if (it != last.end()) {
      const auto* p = it->second;
      for (Index d = 0; d < net.detectors().size(); ++d) {
        const auto& det = net.detectors()[d];
        const bool before = p->section != det.section ? p->section < det.section : p->offset_m < det.offset_m;
        const bool after = s.section != det.section ? s.section > det.section : s.offset_m >= det.offset_m;
        if (before && after) ++crossings[d];
      }
    }
    last[s.vehicle] = &s;
  }
  std::map<Index, int> counted;
  for (const auto& c : out.detector_counts) counted[c.detector] += c.count;
  for (Index d = 0; d < net.detectors().size(); ++d) {
    EXPECT_GT(counted[d], 50);
    EXPECT_EQ(counted[d], crossings[d]) << net.detectors()[d].id;
  }
}

TEST(Run, NoNegativeGapsOrSpeedViolationsInTheDistrict) {
  const auto fx = district_fixture();
  const Network net = Network::build(fx.network);
  SimConfig cfg;
  cfg.duration_s = 900.0;
  cfg.warmup_s = 300.0;
  cfg.record_trajectories = false;
  SimInputs in;
  in.demand = DemandProfile::uniform(fx.peak, cfg.horizon_s());
  for (const auto& r : fx.shuttle_routes) in.shuttles.push_back({r, 10.0, std::nullopt});
  Simulation sim(net, in, cfg);
  while (!sim.finished()) {
    sim.step();
    const auto snap = sim.snapshot();
    std::map<std::pair<Index, int>, std::vector<const VehicleState*>> lanes;
    for (const auto& v : snap.vehicles) {
      ASSERT_GE(v.speed_mps, 0.0);
      ASSERT_LE(v.speed_mps, v.desired_mps + 1e-9);
      if (!v.pulled_over) lanes[{v.section, v.lane}].push_back(&v);
    }
    for (auto& [key, vs] : lanes) {
      std::sort(vs.begin(), vs.end(), [](auto* a, auto* b) { return a->offset_m < b->offset_m; });
      for (std::size_t i = 1; i < vs.size(); ++i)
        ASSERT_GE(vs[i]->offset_m - vs[i]->length_m - vs[i - 1]->offset_m, -1e-6) << "t=" << snap.t_s;
    }
  }
  const auto out = sim.finish();
  EXPECT_EQ(out.stats.speed_violations, 0u);
  EXPECT_EQ(out.stats.accel_violations, 0u);
  EXPECT_GE(out.stats.min_gap_m, -1e-6);
}

// -------------------------------------------------------- traversals

TEST(ExtractTraversals, FullPassageAndUnfinishedVehicle) {
  const Network net = Network::build(line_network(500.0));
  const auto path = ids(net, {"in", "s1", "s2", "out"});
  SimInputs in;
  in.scripted.push_back({0.0, VehicleClass::kHdv, path, std::nullopt, std::nullopt, 0.0, "full"});
  in.scripted.push_back({170.0, VehicleClass::kHdv, path, std::nullopt, std::nullopt, 0.0, "late"});
  SimConfig cfg;
  cfg.warmup_s = 0.0;
  cfg.duration_s = 200.0;
  const auto out = run(net, in, cfg);
  ASSERT_EQ(out.traversals.size(), 1u);
  const auto& t = out.traversals[0];
  EXPECT_EQ(t.vehicle, out.vehicles[0].id);
  EXPECT_NEAR(t.distance_m, 1000.0, 1e-9);
  double in_group = 0.0;
  for (const auto& p : out.passages)
    if (p.vehicle == t.vehicle && (p.section == 1 || p.section == 2)) in_group += p.exit_s - p.entry_s;
  EXPECT_NEAR(t.exit_s - t.entry_s, in_group, 1e-9);
  EXPECT_EQ(extract_traversals(out, net, net.segment_groups()).size(), 1u);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  c.sample_interval_s = 0.25;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.step_s = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace shuttlesim
