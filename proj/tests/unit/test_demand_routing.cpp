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
#include <numeric>

#include "shuttlesim/fixtures.hpp"
#include "shuttlesim/route_choice.hpp"
#include "support.hpp"

namespace shuttlesim {
namespace {

using testing::Gen;
using testing::parallel_network;

// Depth-first enumeration of every node-simple path, as an oracle for Yen.
std::vector<double> all_path_costs(const Network& net, Index oc, Index dc, const std::vector<double>& cost) {
  std::vector<double> out;
  const auto dests = net.centroids()[dc].destination_sections();
  std::vector<char> seen(net.nodes().size(), 0);
  std::function<void(Index, double)> dfs = [&](Index s, double c) {
    const Index head = net.section(s).to_node;
    if (seen[head]) return;
    seen[head] = 1;
    if (std::find(dests.begin(), dests.end(), s) != dests.end()) out.push_back(c);
    for (Index t : net.outgoing_turns(s)) {
      const Index next = net.turns()[t].to_section;
      dfs(next, c + cost[next]);
    }
    seen[head] = 0;
  };
  for (Index o : net.centroids()[oc].origin_sections()) {
    seen[net.section(o).from_node] = 1;
    dfs(o, cost[o]);
    seen[net.section(o).from_node] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(KShortest, ParallelRoutesInCostOrder) {
  const Network net = Network::build(parallel_network(800.0, 900.0));
  const auto cost = free_flow_costs(net);
  const auto paths = k_shortest_paths(net, *net.find_centroid("ZO"), *net.find_centroid("ZE"), 5, cost);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_LT(paths[0].cost, paths[1].cost);
  EXPECT_EQ(paths[0].sections[1], net.section_index("up1"));
  EXPECT_NEAR(paths[0].length_m, 1000.0, 1e-9);
  EXPECT_NEAR(paths[1].length_m, 1100.0, 1e-9);
}

TEST(KShortest, MatchesBruteForceOnFixtures) {
  for (const char* name : {"ring", "district"}) {
    const auto fx = fixture_by_name(name);
    const Network net = Network::build(fx.network);
    const auto cost = free_flow_costs(net);
    for (Index o = 0; o < net.centroids().size(); ++o) {
      for (Index d = 0; d < net.centroids().size(); ++d) {
        if (o == d || net.centroids()[o].origin_sections().empty() ||
            net.centroids()[d].destination_sections().empty())
          continue;
        const auto oracle = all_path_costs(net, o, d, cost);
        if (oracle.empty()) {
          EXPECT_THROW(k_shortest_paths(net, o, d, 3, cost), RoutingError);
          continue;
        }
        const auto paths = k_shortest_paths(net, o, d, 3, cost);
        ASSERT_EQ(paths.size(), std::min<std::size_t>(3, oracle.size())) << name << " " << o << "->" << d;
        for (std::size_t i = 0; i < paths.size(); ++i) EXPECT_NEAR(paths[i].cost, oracle[i], 1e-6);
      }
    }
  }
}

TEST(KShortest, UnreachableThrows) {
  NetworkData d = parallel_network();
  d.turns.erase(d.turns.begin(), d.turns.begin() + 2);  // nothing leaves "in"
  const Network net = Network::build(d);
  EXPECT_THROW(k_shortest_paths(net, *net.find_centroid("ZO"), *net.find_centroid("ZE"), 2, free_flow_costs(net)),
               RoutingError);
}

TEST(Logit, WorkedExample) {
  const std::vector<double> c{100.0, 110.0};
  const auto p = logit_probabilities(c, 12.0);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.2)), 1e-12);
  EXPECT_NEAR(p[0], 0.7685, 5e-5);
}

TEST(Logit, EqualCostsSplitEvenly) {
  const std::vector<double> c{50.0, 50.0, 50.0};
  for (double p : logit_probabilities(c, 12.0)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(CLogit, ZeroBetaIsLogit) {
  const std::vector<double> c{100.0, 120.0, 105.0};
  const std::vector<double> len{1000.0, 1200.0, 1050.0};
  const std::vector<std::vector<double>> ov{{1000, 400, 600}, {400, 1200, 0}, {600, 0, 1050}};
  const auto a = clogit_probabilities(ov, len, c, 12.0, 0.0, 1.0);
  const auto b = logit_probabilities(c, 12.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(CLogit, DisjointEqualPathsSplitEvenly) {
  const std::vector<double> c{80.0, 80.0};
  const std::vector<double> len{700.0, 700.0};
  const std::vector<std::vector<double>> ov{{700, 0}, {0, 700}};
  const auto p = clogit_probabilities(ov, len, c, 12.0, 0.1, 1.0);
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
}

TEST(CLogit, HandEvaluatedThreePaths) {
  // Paths 1 and 2 share 300 m; path 3 is disjoint. All cost the same.
  const std::vector<double> c{60.0, 60.0, 60.0};
  const std::vector<double> len{600.0, 600.0, 600.0};
  const std::vector<std::vector<double>> ov{{600, 300, 0}, {300, 600, 0}, {0, 0, 600}};
  const double beta = 1.0;
  const double cf12 = beta * std::log(1.0 + 0.5);
  const double e12 = std::exp(-12.0 - cf12), e3 = std::exp(-12.0);
  const auto p = clogit_probabilities(ov, len, c, 12.0, beta, 1.0);
  EXPECT_NEAR(p[0], e12 / (2 * e12 + e3), 1e-12);
  EXPECT_NEAR(p[2], e3 / (2 * e12 + e3), 1e-12);
  EXPECT_GT(p[2], p[0]);
}

TEST(ChoiceProperties, ProbabilitiesFormADistributionAndFavourCheapPaths) {
  Gen g(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = g.integer(1, 6);
    const auto c = g.vec(n, 10.0, 500.0);
    const auto len = g.vec(n, 100.0, 5000.0);
    std::vector<std::vector<double>> ov(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ov[i][i] = len[i];
      for (std::size_t j = 0; j < i; ++j) ov[i][j] = ov[j][i] = g.uniform(0.0, std::min(len[i], len[j]));
    }
    const double scale = g.uniform(0.5, 30.0);
    for (const auto& p : {logit_probabilities(c, scale), clogit_probabilities(ov, len, c, scale, g.uniform(0, 2), 1)}) {
      ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
      for (double x : p) ASSERT_GE(x, 0.0);
    }
    const auto p = logit_probabilities(c, scale);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (c[i] < c[j]) ASSERT_GE(p[i], p[j]);
  }
}

TEST(OverlapMatrix, SharedLengths) {
  const Network net = Network::build(parallel_network(800.0, 900.0));
  const auto paths = k_shortest_paths(net, *net.find_centroid("ZO"), *net.find_centroid("ZE"), 2, free_flow_costs(net));
  const auto ov = overlap_matrix(net, paths);
  EXPECT_NEAR(ov[0][1], 200.0, 1e-9);  // the shared entry and exit sections
  EXPECT_NEAR(ov[0][0], paths[0].length_m, 1e-9);
}

// ------------------------------------------------------------ assignment

DemandProfile single_od(double trips_per_hour) {
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = trips_per_hour;
  return DemandProfile::uniform(m, 900.0);
}

TEST(Assignment, SymmetricRoutesSplitEvenly) {
  const Network net = Network::build(parallel_network());
  const auto r = iterate_assignment(net, single_od(1200.0), ChoiceModel::logit(), 50, 1e-4);
  const auto& od = r.plan.intervals.at(0).ods.at(0);
  ASSERT_EQ(od.shares.size(), 2u);
  EXPECT_NEAR(od.shares[0], 0.5, 0.02);
  EXPECT_NEAR(od.shares[1], 0.5, 0.02);
  r.plan.validate();
}

TEST(Assignment, SinglePathTakesEverything) {
  const Network net = Network::build(testing::line_network());
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = 500.0;
  const auto r = iterate_assignment(net, DemandProfile::uniform(m, 900.0), ChoiceModel::clogit(), 10, 1e-6);
  const auto& od = r.plan.intervals.at(0).ods.at(0);
  ASSERT_EQ(od.shares.size(), 1u);
  EXPECT_DOUBLE_EQ(od.shares[0], 1.0);
  EXPECT_TRUE(r.converged);
}

TEST(Assignment, LongerRouteShareGrowsWithDemand) {
  const Network net = Network::build(parallel_network(800.0, 1000.0));
  double previous = 0.0;
  for (double q : {200.0, 1000.0, 2000.0, 3000.0}) {
    const auto r = iterate_assignment(net, single_od(q), ChoiceModel::logit(), 60, 1e-5);
    const auto& od = r.plan.intervals.at(0).ods.at(0);
    const double longer = od.paths[0].length_m > od.paths[1].length_m ? od.shares[0] : od.shares[1];
    EXPECT_GE(longer, previous - 1e-9) << q;
    previous = longer;
  }
  EXPECT_GT(previous, 0.2);
}

TEST(Assignment, PlanLookupUsesTheLatestStartedInterval) {
  const Network net = Network::build(parallel_network());
  OdMatrix m({"ZO", "ZE"});
  m(0, 1) = 400.0;
  const auto r = iterate_assignment(net, DemandProfile::uniform(m, 2700.0), ChoiceModel::logit(), 5, 1e-3);
  ASSERT_EQ(r.plan.intervals.size(), 3u);
  EXPECT_EQ(r.plan.find(1000.0, "ZO", "ZE"), &r.plan.intervals[1].ods[0]);
  EXPECT_EQ(r.plan.find(9999.0, "ZO", "ZE"), &r.plan.intervals[2].ods[0]);
  EXPECT_EQ(r.plan.find(0.0, "ZE", "ZO"), nullptr);
}

TEST(DemandProfile, UniformSlicesPreserveTotals) {
  OdMatrix m({"a", "b", "c"});
  m(0, 1) = 100.0;
  m(2, 0) = 40.0;
  const auto p = DemandProfile::uniform(m, 4200.0);
  ASSERT_EQ(p.slices.size(), 5u);
  EXPECT_DOUBLE_EQ(p.slices.back().duration_s, 600.0);
  EXPECT_NEAR(p.total_trips(), 140.0 * 4200.0 / 3600.0, 1e-9);
}

TEST(OdMatrix, ValidationRejectsBadCells) {
  OdMatrix m({"a", "b"});
  m(0, 1) = -1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m(0, 1) = std::nan("");
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace shuttlesim
