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

#ifndef XSYNTH_NLM_HPP
#define XSYNTH_NLM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/image.hpp"

namespace xsynth {

struct NlmParams {
  int patch_radius = 3;    // 7x7 patches
  int search_radius = 10;  // 21x21 search windows
  double strength = 0.12;  // h, in [0,1] intensity units
};

/// Non-local means. Each output pixel is the exp(-d^2/h^2)-weighted average of
/// the in-image pixels of its search window, d^2 being the mean squared
/// difference of replicate-padded patches.
///
/// Offsets are visited in a fixed order and patch distances come from a
/// per-offset summed-area table, so the cost is independent of patch size and
/// the result is deterministic.
inline GrayImage nlm_filter(const GrayImage& img, int patch_radius, int search_radius, double strength) {
  require(patch_radius >= 1 && search_radius >= 1, ErrorCode::InvalidParameter, "nlm radii must be >= 1");
  require(strength > 0.0 && std::isfinite(strength), ErrorCode::InvalidParameter, "nlm strength must be > 0");

  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const std::ptrdiff_t p = patch_radius;
  const std::ptrdiff_t ph = h + 2 * p;  // padded extent
  const std::ptrdiff_t pw = w + 2 * p;
  const double inv_area = 1.0 / static_cast<double>((2 * p + 1) * (2 * p + 1));
  const double inv_h2 = 1.0 / (strength * strength);

  std::vector<double> num(img.size(), 0.0), den(img.size(), 0.0);
  // table(r, c) = sum of squared differences over padded rows < r, cols < c
  std::vector<double> table(static_cast<std::size_t>((ph + 1) * (pw + 1)), 0.0);
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> double& {
    return table[static_cast<std::size_t>(r * (pw + 1) + c)];
  };

  for (std::ptrdiff_t dy = -search_radius; dy <= search_radius; ++dy) {
    for (std::ptrdiff_t dx = -search_radius; dx <= search_radius; ++dx) {
      for (std::ptrdiff_t r = 0; r < ph; ++r) {
        double row_sum = 0.0;
        for (std::ptrdiff_t c = 0; c < pw; ++c) {
          const std::ptrdiff_t u = r - p, v = c - p;
          const double d = img.clamped(u, v) - img.clamped(u + dy, v + dx);
          row_sum += d * d;
          at(r + 1, c + 1) = at(r, c + 1) + row_sum;
        }
      }
      for (std::ptrdiff_t u = 0; u < h; ++u) {
        const std::ptrdiff_t nu = u + dy;
        if (nu < 0 || nu >= h) continue;
        for (std::ptrdiff_t v = 0; v < w; ++v) {
          const std::ptrdiff_t nv = v + dx;
          if (nv < 0 || nv >= w) continue;
          // patch centred at (u, v) covers padded rows [u, u + 2p], cols [v, v + 2p]
          const double ssd = at(u + 2 * p + 1, v + 2 * p + 1) - at(u, v + 2 * p + 1) - at(u + 2 * p + 1, v) + at(u, v);
          const double weight = std::exp(-std::max(ssd, 0.0) * inv_area * inv_h2);
          const auto i = static_cast<std::size_t>(u * w + v);
          num[i] += weight * img(static_cast<std::size_t>(nu), static_cast<std::size_t>(nv));
          den[i] += weight;
        }
      }
    }
  }

  // a convex combination stays in range; the clamp only absorbs rounding
  const auto [lo, hi] = min_max(img);
  GrayImage out(img.height(), img.width());
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = std::clamp(num[i] / den[i], lo, hi);
  return out;
}

inline GrayImage nlm_filter(const GrayImage& img, const NlmParams& params = {}) {
  return nlm_filter(img, params.patch_radius, params.search_radius, params.strength);
}

/// Filters every plane of a thermal stack, or only S0 when s0_only is set.
inline ThermalStack nlm_filter(const ThermalStack& stack, const NlmParams& params, bool s0_only = false) {
  std::vector<GrayImage> planes;
  planes.reserve(stack.channel_count());
  for (std::size_t i = 0; i < stack.channel_count(); ++i) {
    const bool apply = !s0_only || stack.channels()[i] == Channel::S0;
    planes.push_back(apply ? nlm_filter(stack.plane(i), params) : stack.plane(i));
  }
  return ThermalStack(stack.channels(), std::move(planes));
}

}  // namespace xsynth

#endif  // XSYNTH_NLM_HPP
