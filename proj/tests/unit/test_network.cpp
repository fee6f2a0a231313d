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

#include <filesystem>
#include <fstream>

#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/io.hpp"
#include "shuttlesim/network.hpp"
#include "support.hpp"

namespace shuttlesim {
namespace {

using testing::Gen;
using testing::line_network;

TEST(LoadNetwork, MinimalTwoSectionFile) {
  const auto path = std::filesystem::temp_directory_path() / "shuttlesim_min_net.json";
  std::ofstream(path) << R"({
    "units": {"length": "m", "speed": "mph"},
    "nodes": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
    "sections": [{"id": "x", "from": "a", "to": "b", "length": 100, "speed_limit": 25},
                 {"id": "y", "from": "b", "to": "c", "length": 120, "speed_limit": 25}],
    "turns": [{"from": "x", "to": "y"}]
  })";
  const Network net = Network::build(io::load_network(path));
  EXPECT_EQ(net.sections().size(), 2u);
  EXPECT_EQ(net.turns().size(), 1u);
  EXPECT_NEAR(net.section(0).speed_limit_mps, 25 * 0.44704, 1e-12);
}

TEST(LoadNetwork, RouteSkippingATurnIsRejected) {
  auto d = line_network();
  d.turns.erase(d.turns.begin() + 1);  // s1 -> s2
  d.transit_routes = {{"R", {"s1", "s2"}, {}}};
  try {
    Network::build(d);
    FAIL() << "expected NetworkError";
  } catch (const NetworkError& e) {
    EXPECT_NE(std::string(e.what()).find("route not connected"), std::string::npos) << e.what();
  }
}

TEST(LoadNetwork, DanglingReferenceNamesTheId) {
  auto d = line_network();
  d.turns.push_back({"s2", "nowhere"});
  try {
    Network::build(d);
    FAIL();
  } catch (const NetworkError& e) {
    EXPECT_EQ(e.offending_id(), "nowhere");
  }
}

TEST(LoadNetwork, DistrictFixtureHasThreeRoutesAndTwentyTwoSegments) {
  const auto fx = district_fixture();
  const Network net = Network::build(fx.network);
  EXPECT_EQ(net.transit_routes().size(), 3u);
  std::size_t segments = 0;
  for (const auto& g : net.segment_groups()) segments += g.sections.size();
  EXPECT_EQ(segments, 22u);
  EXPECT_EQ(net.segment_groups().size(), 6u);
}

TEST(LoadNetwork, JsonRoundTripIsLossless) {
  const auto fx = district_fixture();
  const auto j = io::network_to_json(fx.network);
  const auto back = io::network_from_json(j);
  EXPECT_EQ(io::network_to_json(back).dump(), j.dump());
  EXPECT_NO_THROW(Network::build(back));
}

TEST(LoadNetwork, DeclaredUnitsAreConverted) {
  auto j = io::network_to_json(line_network(1609.344));
  j["units"] = {{"length", "mi"}, {"speed", "kmh"}};
  for (auto& s : j["sections"]) {
    s["length"] = 1.0;
    s["speed_limit"] = 36.0;
  }
  for (auto& x : j["detectors"]) x["offset"] = 0.5;
  const Network net = Network::build(io::network_from_json(j));
  EXPECT_NEAR(net.section(1).length_m, 1609.344, 1e-9);
  EXPECT_NEAR(net.section(1).speed_limit_mps, 10.0, 1e-12);
}

SignalPlan plan60() { return {0, 60.0, 0.0, {{"main", 0.0, 30.0}}}; }

TEST(SignalState, InsideInterval) { EXPECT_TRUE(signal_state(plan60(), 15.0)[0]); }
TEST(SignalState, Periodic) { EXPECT_TRUE(signal_state(plan60(), 75.0)[0]); }
TEST(SignalState, HalfOpenEnd) { EXPECT_FALSE(signal_state(plan60(), 30.0)[0]); }

TEST(SignalState, PeriodicityProperty) {
  Gen g(11);
  for (int i = 0; i < 2000; ++i) {
    SignalPlan p{0, g.uniform(30, 150), g.uniform(0, 100), {}};
    const double a = g.uniform(0, p.cycle_s), b = g.uniform(0, p.cycle_s);
    p.phases.push_back({"p", std::min(a, b), std::max(a, b)});
    // Cycle-aligned times keep the fractional part exact.
    const double t = std::floor(g.uniform(0, 1000));
    const int k = g.integer(0, 20);
    EXPECT_EQ(signal_state(p, t), signal_state(p, t + k * p.cycle_s)) << p.cycle_s << ' ' << t;
  }
}

TEST(PathIdealTime, HdvAtTheLimit) {
  NetworkData d;
  d.nodes = {{"a"}, {"b"}};
  d.sections = {{"s", "a", "b", 402.3, 1, 11.18}};
  d.segment_groups = {{"g", {"s"}}};
  const Network net = Network::build(d);
  EXPECT_NEAR(path_ideal_time(net, net.segment_groups()[0], units::kInfinity), 36.0, 0.05);
  EXPECT_NEAR(path_ideal_time(net, net.segment_groups()[0], units::mph(9.5)), 94.7, 0.05);
  EXPECT_DOUBLE_EQ(path_ideal_time(net, SegmentGroup{"empty", {}}, 10.0), 0.0);
}

TEST(PathIdealTime, AdditiveOverConcatenation) {
  const Network net = Network::build(district_fixture().network);
  Gen g(3);
  for (int i = 0; i < 200; ++i) {
    const auto& a = net.segment_groups()[g.integer(0, 5)];
    const auto& b = net.segment_groups()[g.integer(0, 5)];
    SegmentGroup ab{"ab", a.sections};
    ab.sections.insert(ab.sections.end(), b.sections.begin(), b.sections.end());
    const double cap = g.uniform(2.0, 20.0);
    EXPECT_NEAR(path_ideal_time(net, ab, cap), path_ideal_time(net, a, cap) + path_ideal_time(net, b, cap), 1e-9);
  }
}

TEST(NetworkInvariants, FixturesKeepOffsetsInsideSections) {
  for (const char* name : {"corridor", "district", "ring"}) {
    const Network net = Network::build(fixture_by_name(name).network);
    for (const auto& d : net.detectors()) {
      EXPECT_GE(d.offset_m, 0.0);
      EXPECT_LE(d.offset_m, net.section(d.section).length_m);
    }
    for (const auto& r : net.transit_routes())
      for (const auto& s : r.stops) EXPECT_LE(s.offset_m, net.section(s.section).length_m);
    for (const auto& t : net.turns())
      EXPECT_EQ(net.section(t.from_section).to_node, net.section(t.to_section).from_node);
  }
}

TEST(Fixtures, RouteOneIsTwoPointOneNineMiles) {
  const Network net = Network::build(corridor_fixture().network);
  EXPECT_NEAR(net.transit_routes()[0].length_m, units::miles(2.19), 1e-6);
  EXPECT_NEAR(net.transit_routes()[0].length_miles(), 2.19, 1e-9);
}

}  // namespace
}  // namespace shuttlesim
