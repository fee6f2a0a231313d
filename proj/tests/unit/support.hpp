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

#include <random>
#include <string>
#include <vector>

#include "shuttlesim/network.hpp"
#include "shuttlesim/rng.hpp"
#include "shuttlesim/units.hpp"

namespace shuttlesim::testing {

/// A straight road A -> B -> C of two sections joined by one turn, with a
/// centroid at each end.
inline NetworkData line_network(double length_m = 500.0, double limit_mph = 25.0, int lanes = 1) {
  NetworkData d;
  d.nodes = {{"A"}, {"B"}, {"C"}, {"O"}, {"E"}};
  const double v = units::mph(limit_mph);
  d.sections = {{"in", "O", "A", 100.0, lanes, v},
                {"s1", "A", "B", length_m, lanes, v},
                {"s2", "B", "C", length_m, lanes, v},
                {"out", "C", "E", 100.0, lanes, v}};
  d.turns = {{"in", "s1"}, {"s1", "s2"}, {"s2", "out"}};
  d.centroids = {{"ZO", CentroidKind::kExternal, {{"in", ConnectorDirection::kOut}}},
                 {"ZE", CentroidKind::kExternal, {{"out", ConnectorDirection::kIn}}}};
  d.detectors = {{"d1", "s1", length_m / 2, 300.0}, {"d2", "s2", length_m / 2, 300.0}};
  d.segment_groups = {{"G", {"s1", "s2"}}};
  return d;
}

/// Two identical parallel routes between one origin and one destination.
inline NetworkData parallel_network(double upper_m = 800.0, double lower_m = 800.0) {
  NetworkData d;
  d.nodes = {{"O"}, {"S"}, {"U"}, {"L"}, {"T"}, {"E"}};
  const double v = units::mph(30.0);
  d.sections = {{"in", "O", "S", 100.0, 1, v},  {"up1", "S", "U", upper_m / 2, 1, v},
                {"up2", "U", "T", upper_m / 2, 1, v}, {"lo1", "S", "L", lower_m / 2, 1, v},
                {"lo2", "L", "T", lower_m / 2, 1, v}, {"out", "T", "E", 100.0, 1, v}};
  d.turns = {{"in", "up1"}, {"in", "lo1"}, {"up1", "up2"}, {"lo1", "lo2"}, {"up2", "out"}, {"lo2", "out", -1, -1, TurnControl::kYield, ""}};
  d.centroids = {{"ZO", CentroidKind::kExternal, {{"in", ConnectorDirection::kOut}}},
                 {"ZE", CentroidKind::kExternal, {{"out", ConnectorDirection::kIn}}}};
  return d;
}

/// Hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(make_stream(seed, 0x7e57)) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::vector<double> vec(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

}  // namespace shuttlesim::testing
