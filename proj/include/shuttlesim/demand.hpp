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

#include <cstddef>
#include <string>
#include <vector>

#include "shuttlesim/rng.hpp"

namespace shuttlesim {

/// Centroid-to-centroid trip table. `trips` is row-major (origin, destination).
struct OdMatrix {
  std::vector<std::string> centroids;
  std::vector<double> trips;

  OdMatrix() = default;
  explicit OdMatrix(std::vector<std::string> ids)
      : centroids(std::move(ids)), trips(centroids.size() * centroids.size(), 0.0) {}

  std::size_t size() const { return centroids.size(); }
  double& operator()(std::size_t o, std::size_t d) { return trips[o * centroids.size() + d]; }
  double operator()(std::size_t o, std::size_t d) const { return trips[o * centroids.size() + d]; }
  double total() const;
  OdMatrix scaled(double factor) const;
  /// Throws std::invalid_argument on shape mismatch or negative cells.
  void validate() const;
};

/// Trips released during [start_s, start_s + duration_s).
struct DemandSlice {
  double start_s = 0.0;
  double duration_s = 900.0;
  OdMatrix trips;
};

struct DemandProfile {
  std::vector<DemandSlice> slices;

  /// Stationary profile covering [0, horizon_s) from an hourly matrix.
  static DemandProfile uniform(const OdMatrix& trips_per_hour, double horizon_s, double slice_s = 900.0);
  double total_trips() const;
};

struct Arrival {
  double time_s = 0.0;
  std::size_t origin = 0;       // index into the slice's centroid list
  std::size_t destination = 0;
};

/// Poisson arrivals for every cell of a slice, rate = cell / duration.
/// Returned in time order (ties by cell order).
std::vector<Arrival> inject_demand(const DemandSlice& slice, Rng& rng);

}  // namespace shuttlesim
