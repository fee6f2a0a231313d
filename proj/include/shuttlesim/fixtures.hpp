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

#include <string>
#include <vector>

#include "shuttlesim/demand.hpp"
#include "shuttlesim/network.hpp"

namespace shuttlesim {

/// A two-way arterial between two terminals. Nodes N0..Nn carry forward
/// sections {name}{fwd}1..n and backward sections {name}{bwd}1..n. Each end
/// has a centroid (entry/exit connectors) and a shuttle terminal stub pair
/// with a stop; side streets join at the listed internal nodes.
struct CorridorLayout {
  std::string name = "R1";
  std::string fwd = "WE";
  std::string bwd = "EW";
  int sections = 3;
  double section_length_m = 547.41;
  std::vector<double> limits_mph = {25.0};  // per forward section (last value repeats)
  int lanes = 1;
  std::vector<int> side_nodes;
  bool signalized = false;
  double cycle_s = 70.0;
  double stub_length_m = 60.0;
  double stop_offset_m = 50.0;
  double dwell_s = 20.0;
  bool detectors = true;
};

/// Appends one corridor (nodes, sections, turns, signals, centroids,
/// shuttle route, segment groups, detectors) to `data`.
void add_corridor(NetworkData& data, const CorridorLayout& layout);

/// Hourly OD matrix over a corridor's centroids: `through` trips each way
/// between the terminals and `side` trips to and from every side street.
OdMatrix corridor_demand(const CorridorLayout& layout, double through, double side);

struct Fixture {
  std::string name;
  NetworkData network;
  OdMatrix offpeak;  // trips per hour
  OdMatrix peak;
  std::vector<std::string> shuttle_routes;
};

/// Single-lane 25 mph corridor (one route, two segment groups).
Fixture corridor_fixture();
/// Three-route district: single-lane 25 mph, single-lane 20/15 mph and a
/// signalized two-lane 35 mph arterial; six segment groups.
Fixture district_fixture();
/// Four centroids around a two-way ring with detectors on every section.
Fixture ring_fixture();

Fixture fixture_by_name(const std::string& name);

/// Merges per-corridor matrices into one block-diagonal matrix.
OdMatrix merge_matrices(const std::vector<OdMatrix>& parts);

}  // namespace shuttlesim
