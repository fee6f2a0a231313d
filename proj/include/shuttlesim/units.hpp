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

#include <limits>

namespace shuttlesim::units {

inline constexpr double kMphToMps = 0.44704;
inline constexpr double kMpsToMph = 1.0 / kMphToMps;
inline constexpr double kKmhToMps = 1.0 / 3.6;
inline constexpr double kMileToMeter = 1609.344;
inline constexpr double kFootToMeter = 0.3048;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

constexpr double mph(double v) { return v * kMphToMps; }
constexpr double to_mph(double mps) { return mps * kMpsToMph; }
constexpr double miles(double d) { return d * kMileToMeter; }
constexpr double to_miles(double m) { return m / kMileToMeter; }

}  // namespace shuttlesim::units
