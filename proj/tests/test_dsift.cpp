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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "xsynth/dsift.hpp"

using namespace xsynth;
using xsynth::testing::random_image;

namespace {

// One descriptor computed pixel by pixel, straight from the definition.
std::vector<double> descriptor_by_definition(const GrayImage& x, const DsiftConfig& cfg, std::size_t r,
                                             std::size_t c) {
  const int K = cfg.num_orientations, G = cfg.grid, cell = cfg.cell_size;
  const int F = G * cell;
  std::vector<double> d(static_cast<std::size_t>(G * G * K), 0.0);
  auto tri = [&](int p, int i) {
    const double centre = (i + 0.5) * cell - 0.5;
    return std::max(0.0, 1.0 - std::abs(p - centre) / cell);
  };
  for (int p = 0; p < F; ++p)
    for (int q = 0; q < F; ++q) {
      const auto u = static_cast<std::ptrdiff_t>(r) * cfg.stride + p;
      const auto v = static_cast<std::ptrdiff_t>(c) * cfg.stride + q;
      const double gx = (x.clamped(u, v + 1) - x.clamped(u, v - 1)) / 2.0;
      const double gy = (x.clamped(u + 1, v) - x.clamped(u - 1, v)) / 2.0;
      const double m = std::sqrt(gx * gx + gy * gy);
      if (m == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0) theta += 2.0 * std::numbers::pi;
      const double b = theta / (2.0 * std::numbers::pi / K);
      const int k0 = static_cast<int>(std::floor(b)) % K;
      const double f = b - std::floor(b);
      for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
          const double w = tri(p, i) * tri(q, j);
          if (w == 0.0) continue;
          d[static_cast<std::size_t>((i * G + j) * K + k0)] += w * m * (1.0 - f);
          d[static_cast<std::size_t>((i * G + j) * K + (k0 + 1) % K)] += w * m * f;
        }
    }
  auto norm = [](const std::vector<double>& z) {
    double s = 0.0;
    for (double e : z) s += e * e;
    return std::sqrt(s);
  };
  const double n1 = norm(d) + cfg.norm_eps;
  const double t = cfg.clamp_threshold, s = cfg.smooth_sharpness;
  auto softplus = [](double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); };
  for (double& e : d) {
    const double a = e / n1;
    e = (softplus(s) - softplus(s - s / t * a)) * t / s;
  }
  const double n2 = norm(d) + cfg.norm_eps;
  for (double& e : d) e /= n2;
  return d;
}

double inner(const FeatureMap& a, const FeatureMap& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

}  // namespace

TEST(DsiftForward, ConstantImageGivesZeroDescriptors) {
  const auto f = dsift_forward(GrayImage(24, 20, 0.4));
  for (double x : f.values()) EXPECT_EQ(x, 0.0);
}

TEST(DsiftForward, ShapeArithmetic) {
  const auto f = dsift_forward(GrayImage(32, 32, 0.1));
  EXPECT_EQ(f.rows(), 5u);
  EXPECT_EQ(f.cols(), 5u);
  EXPECT_EQ(f.depth(), 128u);
  DsiftConfig cfg;
  cfg.stride = 3;
  const auto g = dsift_forward(GrayImage(40, 17, 0.1), cfg);
  EXPECT_EQ(g.rows(), (40u - 16u) / 3u + 1u);
  EXPECT_EQ(g.cols(), 1u);
}

TEST(DsiftForward, TooSmall) {
  EXPECT_XSYNTH_ERROR(dsift_forward(GrayImage(15, 40)), ErrorCode::ImageTooSmall);
  DsiftConfig bad;
  bad.num_orientations = 1;
  EXPECT_XSYNTH_ERROR(dsift_forward(GrayImage(20, 20), bad), ErrorCode::InvalidParameter);
}

TEST(DsiftForward, VerticalStepEdgeMatchesDefinition) {
  GrayImage img(16, 16, 0.2);
  for (std::size_t u = 0; u < 16; ++u)
    for (std::size_t v = 7; v < 16; ++v) img(u, v) = 0.9;
  const DsiftConfig cfg;
  const auto f = dsift_forward(img, cfg);
  ASSERT_EQ(f.locations(), 1u);
  const auto expect = descriptor_by_definition(img, cfg, 0, 0);
  double energy_edge_bins = 0.0, energy_total = 0.0;
  for (std::size_t d = 0; d < f.depth(); ++d) {
    EXPECT_NEAR(f.values()[d], expect[d], 1e-12);
    const auto k = d % 8;
    energy_total += f.values()[d] * f.values()[d];
    // gradient points along +v: angle 0, between bins 7 and 0 / 0 and 1
    if (k == 0 || k == 1 || k == 7) energy_edge_bins += f.values()[d] * f.values()[d];
  }
  EXPECT_GT(energy_total, 0.0);
  EXPECT_NEAR(energy_edge_bins / energy_total, 1.0, 1e-12);
}

TEST(DsiftForward, RandomDescriptorsMatchDefinition) {
  std::mt19937_64 rng(21);
  std::vector<DsiftConfig> cfgs(3);
  cfgs[1].cell_size = 3;
  cfgs[1].grid = 3;
  cfgs[1].stride = 2;
  cfgs[1].num_orientations = 6;
  cfgs[2].cell_size = 2;
  cfgs[2].stride = 5;
  cfgs[2].clamp_threshold = 0.3;
  cfgs[2].smooth_sharpness = 10.0;
  for (const auto& cfg : cfgs) {
    const auto img = random_image(23, 27, rng);
    const auto f = dsift_forward(img, cfg);
    for (std::size_t r = 0; r < f.rows(); ++r)
      for (std::size_t c = 0; c < f.cols(); ++c) {
        const auto expect = descriptor_by_definition(img, cfg, r, c);
        for (std::size_t d = 0; d < f.depth(); ++d) ASSERT_NEAR(f.at(r, c)[d], expect[d], 1e-12);
      }
  }
}

TEST(DsiftForward, DescriptorNormsBounded) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto img = random_image(30, 26, rng, -3.0, 5.0);
    if (trial % 2) img(5, 5) = 1e6;
    const auto f = dsift_forward(img);
    for (std::size_t loc = 0; loc < f.locations(); ++loc) {
      double s = 0.0;
      for (double x : f.location(loc)) s += x * x;
      EXPECT_LE(std::sqrt(s), 1.0 + 1e-6);
    }
  }
}

TEST(DsiftForward, TranslationCovariance) {
  std::mt19937_64 rng(17);
  const DsiftConfig cfg;
  const std::size_t s = static_cast<std::size_t>(cfg.stride);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_image(36, 40, rng);
    auto y = random_image(36, 40, rng);
    for (std::size_t u = 0; u < 36; ++u)
      for (std::size_t v = s; v < 40; ++v) y(u, v) = x(u, v - s);
    const auto fx = dsift_forward(x, cfg), fy = dsift_forward(y, cfg);
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t r = 0; r < fx.rows(); ++r)
      for (std::size_t c = 1; c + 2 < fy.cols(); ++c) {
        for (std::size_t d = 0; d < fx.depth(); ++d)
          worst = std::max(worst, std::abs(fx.at(r, c)[d] - fy.at(r, c + 1)[d]));
        ++compared;
      }
    EXPECT_GT(compared, 0u);
    EXPECT_LE(worst, 1e-5);
  }
}

TEST(DsiftForward, StackConcatenatesChannels) {
  std::mt19937_64 rng(6);
  const auto a = random_image(20, 20, rng), b = random_image(20, 20, rng);
  const auto fa = dsift_forward(a), fb = dsift_forward(b);
  const auto f = dsift_forward(ThermalStack({Channel::S0, Channel::DoLP}, {a, b}));
  ASSERT_EQ(f.depth(), 256u);
  for (std::size_t loc = 0; loc < f.locations(); ++loc)
    for (std::size_t d = 0; d < 128; ++d) {
      EXPECT_EQ(f.location(loc)[d], fa.location(loc)[d]);
      EXPECT_EQ(f.location(loc)[128 + d], fb.location(loc)[d]);
    }
}

TEST(DsiftForward, Deterministic) {
  std::mt19937_64 rng(8);
  const auto img = random_image(40, 40, rng);
  EXPECT_EQ(dsift_forward(img), dsift_forward(img));
}

TEST(DsiftBackward, ZeroUpstreamAndLinearity) {
  std::mt19937_64 rng(4);
  const auto img = random_image(20, 20, rng);
  const DsiftConfig cfg;
  const DsiftTape tape(img, cfg);
  const auto& f = tape.features();
  const GrayImage result = tape.backward(FeatureMap(f.rows(), f.cols(), f.depth()));
  for (double g : result.pixels()) EXPECT_EQ(g, 0.0);
  const auto up = xsynth::testing::random_features(f.rows(), f.cols(), f.depth(), rng);
  FeatureMap up2 = up;
  for (auto& x : up2.values()) x *= 2.0;
  const auto g1 = tape.backward(up), g2 = tape.backward(up2);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g2.pixels()[i], 2.0 * g1.pixels()[i], 1e-14);
  EXPECT_EQ(dsift_backward(img, cfg, up), g1);
}

TEST(DsiftBackward, ShapeMismatch) {
  const GrayImage img(20, 20, 0.1);
  EXPECT_XSYNTH_ERROR(dsift_backward(img, DsiftConfig{}, FeatureMap(2, 2, 64)), ErrorCode::DimensionMismatch);
  EXPECT_XSYNTH_ERROR(dsift_backward(img, DsiftConfig{}, FeatureMap(3, 2, 128)), ErrorCode::DimensionMismatch);
}

TEST(DsiftBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(1234);
  std::vector<DsiftConfig> cfgs(2);
  cfgs[1].cell_size = 2;
  cfgs[1].stride = 2;
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const auto& cfg = cfgs[trial % 2];
    const std::size_t h = 16 + trial % 5, w = 20 - trial % 3;
    const auto img = random_image(h, w, rng);
    const DsiftTape tape(img, cfg);
    const auto up = xsynth::testing::random_features(tape.features().rows(), tape.features().cols(),
                                                     tape.features().depth(), rng);
    const auto grad = tape.backward(up);
    const auto dir = xsynth::testing::random_direction(img, rng);
    const double analytic = xsynth::testing::dot(grad, dir);
    const double numeric = xsynth::testing::central_difference(
        [&](const GrayImage& x) { return inner(dsift_forward(x, cfg), up); }, img, dir, 1e-4);
    EXPECT_LE(xsynth::testing::relative_error(analytic, numeric), 1e-3) << "trial " << trial;
    ++checked;
  }
  EXPECT_GE(checked, 20);
}
