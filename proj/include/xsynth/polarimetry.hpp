// Copyright 2026 The xsynth Authors
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

#ifndef XSYNTH_POLARIMETRY_HPP
#define XSYNTH_POLARIMETRY_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/image.hpp"

namespace xsynth {

inline constexpr double kDefaultDolpEps = 1e-6;

/// Degree of linear polarization sqrt(S1^2 + S2^2) / S0, with S0 floored at
/// eps. eps = 0 is strict mode: a zero S0 pixel is an error.
inline GrayImage compute_dolp(const GrayImage& s0, const GrayImage& s1, const GrayImage& s2,
                              double eps = kDefaultDolpEps) {
  require_same_shape(s0, s1, "compute_dolp S0/S1");
  require_same_shape(s0, s2, "compute_dolp S0/S2");
  require(eps >= 0.0 && std::isfinite(eps), ErrorCode::InvalidParameter, "dolp eps must be >= 0");
  GrayImage out(s0.height(), s0.width());
  for (std::size_t i = 0; i < s0.size(); ++i) {
    const double denom = std::max(s0.pixels()[i], eps);
    if (denom <= 0.0) fail(ErrorCode::DivisionByZero, "S0 is zero at pixel " + std::to_string(i));
    out.pixels()[i] = std::hypot(s1.pixels()[i], s2.pixels()[i]) / denom;
  }
  return out;
}

/// Builds the network input stack: S0 alone for conventional thermal, S0 and
/// DoLP for polarimetric imagery.
inline ThermalStack make_thermal_stack(const GrayImage& s0) { return ThermalStack({Channel::S0}, {s0}); }

inline ThermalStack make_polarimetric_stack(const GrayImage& s0, const GrayImage& s1, const GrayImage& s2,
                                            double eps = kDefaultDolpEps) {
  return ThermalStack({Channel::S0, Channel::DoLP}, {s0, compute_dolp(s0, s1, s2, eps)});
}

}  // namespace xsynth

#endif  // XSYNTH_POLARIMETRY_HPP
