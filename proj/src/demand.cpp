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

#include "shuttlesim/demand.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shuttlesim {

double OdMatrix::total() const { return std::accumulate(trips.begin(), trips.end(), 0.0); }

OdMatrix OdMatrix::scaled(double factor) const {
  OdMatrix out = *this;
  for (double& t : out.trips) t *= factor;
  return out;
}

void OdMatrix::validate() const {
  if (trips.size() != centroids.size() * centroids.size())
    throw std::invalid_argument("OD matrix is not square over its centroid list");
  for (double t : trips)
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("OD matrix has a negative or non-finite cell");
}

DemandProfile DemandProfile::uniform(const OdMatrix& trips_per_hour, double horizon_s, double slice_s) {
  DemandProfile p;
  for (double start = 0.0; start < horizon_s - 1e-9; start += slice_s) {
    const double duration = std::min(slice_s, horizon_s - start);
    p.slices.push_back({start, duration, trips_per_hour.scaled(duration / 3600.0)});
  }
  return p;
}

double DemandProfile::total_trips() const {
  double total = 0.0;
  for (const auto& s : slices) total += s.trips.total();
  return total;
}

std::vector<Arrival> inject_demand(const DemandSlice& slice, Rng& rng) {
  slice.trips.validate();
  std::vector<Arrival> out;
  const std::size_t n = slice.trips.size();
  const double end = slice.start_s + slice.duration_s;
  for (std::size_t o = 0; o < n; ++o) {
    for (std::size_t d = 0; d < n; ++d) {
      const double cell = slice.trips(o, d);
      if (cell <= 0.0 || slice.duration_s <= 0.0) continue;
      std::exponential_distribution<double> gap(cell / slice.duration_s);
      for (double t = slice.start_s + gap(rng); t < end; t += gap(rng)) out.push_back({t, o, d});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) { return a.time_s < b.time_s; });
  return out;
}

}  // namespace shuttlesim
