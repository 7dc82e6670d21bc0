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

#ifndef XSYNTH_REGULARIZERS_HPP
#define XSYNTH_REGULARIZERS_HPP

#include <cmath>
#include <utility>

#include "xsynth/error.hpp"
#include "xsynth/image.hpp"

namespace xsynth {

/// A scalar penalty with its gradient over the same pixels.
struct ValueAndGradient {
  double value = 0.0;
  GrayImage grad;
};

/// sum |x|^alpha, keeping intensities in a bounded range.
inline ValueAndGradient reg_alpha(const GrayImage& x, double alpha) {
  require(alpha >= 1.0 && std::isfinite(alpha), ErrorCode::InvalidParameter, "alpha must be >= 1");
  ValueAndGradient out{0.0, GrayImage(x.height(), x.width())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x.pixels()[i]);
    out.value += std::pow(a, alpha);
    const double sign = x.pixels()[i] > 0.0 ? 1.0 : (x.pixels()[i] < 0.0 ? -1.0 : 0.0);
    out.grad.pixels()[i] = sign == 0.0 ? 0.0 : alpha * sign * std::pow(a, alpha - 1.0);
  }
  return out;
}

/// sum over pixels of (dx^2 + dy^2 + eps)^(beta/2) with forward differences;
/// the last row/column has no forward neighbour and contributes a zero
/// difference along that axis.
inline ValueAndGradient reg_tv(const GrayImage& x, double tv_beta, double tv_eps) {
  require(tv_beta >= 1.0 && std::isfinite(tv_beta), ErrorCode::InvalidParameter, "tv_beta must be >= 1");
  require(tv_eps >= 0.0, ErrorCode::InvalidParameter, "tv_eps must be >= 0");
  const std::size_t h = x.height(), w = x.width();
  ValueAndGradient out{0.0, GrayImage(h, w)};
  const double half = 0.5 * tv_beta;
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      const double dx = v + 1 < w ? x(u, v + 1) - x(u, v) : 0.0;
      const double dy = u + 1 < h ? x(u + 1, v) - x(u, v) : 0.0;
      const double s = dx * dx + dy * dy + tv_eps;
      out.value += std::pow(s, half);
      if (s == 0.0) continue;  // zero difference: no gradient (subgradient 0 when beta < 2)
      const double coeff = tv_beta * std::pow(s, half - 1.0);  // d/d(diff) = beta * s^(beta/2-1) * diff
      if (v + 1 < w) {
        out.grad(u, v + 1) += coeff * dx;
        out.grad(u, v) -= coeff * dx;
      }
      if (u + 1 < h) {
        out.grad(u + 1, v) += coeff * dy;
        out.grad(u, v) -= coeff * dy;
      }
    }
  return out;
}

}  // namespace xsynth

#endif  // XSYNTH_REGULARIZERS_HPP
