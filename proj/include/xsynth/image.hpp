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

#ifndef XSYNTH_IMAGE_HPP
#define XSYNTH_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xsynth/error.hpp"

namespace xsynth {

/// Single-channel raster of real intensities, row-major, indexed (u, v) with
/// u the row and v the column.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width, fill) {
    require(height >= 1 && width >= 1, ErrorCode::InvalidParameter, "image dimensions must be positive");
  }

  GrayImage(std::size_t height, std::size_t width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    require(height >= 1 && width >= 1, ErrorCode::InvalidParameter, "image dimensions must be positive");
    require(data_.size() == height * width, ErrorCode::DimensionMismatch, "data length must equal height*width");
    for (double x : data_) require(std::isfinite(x), ErrorCode::InvalidParameter, "image intensities must be finite");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t u, std::size_t v) noexcept { return data_[u * width_ + v]; }
  double operator()(std::size_t u, std::size_t v) const noexcept { return data_[u * width_ + v]; }

  /// Replicate-boundary access.
  double clamped(std::ptrdiff_t u, std::ptrdiff_t v) const noexcept {
    u = std::clamp<std::ptrdiff_t>(u, 0, static_cast<std::ptrdiff_t>(height_) - 1);
    v = std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(width_) - 1);
    return data_[static_cast<std::size_t>(u) * width_ + static_cast<std::size_t>(v)];
  }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const GrayImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const GrayImage& a, const GrayImage& b, const std::string& what) {
  require(a.same_shape(b), ErrorCode::DimensionMismatch,
          what + ": " + std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
              std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

inline std::pair<double, double> min_max(const GrayImage& img) {
  auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  return {*lo, *hi};
}

inline double max_abs_difference(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

enum class Channel { S0, S1, S2, DoLP };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::S0: return "S0";
    case Channel::S1: return "S1";
    case Channel::S2: return "S2";
    case Channel::DoLP: return "DoLP";
  }
  return "?";
}

/// Multi-channel thermal input. Conventional thermal is a stack holding only
/// S0; the polarimetric case adds DoLP (and optionally the raw S1/S2 planes).
class ThermalStack {
 public:
  ThermalStack() = default;

  ThermalStack(std::vector<Channel> channels, std::vector<GrayImage> planes)
      : channels_(std::move(channels)), planes_(std::move(planes)) {
    require(!channels_.empty(), ErrorCode::InvalidParameter, "thermal stack needs at least one channel");
    require(channels_.size() == planes_.size(), ErrorCode::DimensionMismatch, "one plane per channel");
    for (const auto& p : planes_) require_same_shape(p, planes_.front(), "thermal stack planes");
  }

  std::size_t height() const noexcept { return planes_.front().height(); }
  std::size_t width() const noexcept { return planes_.front().width(); }
  std::size_t channel_count() const noexcept { return channels_.size(); }
  const std::vector<Channel>& channels() const noexcept { return channels_; }
  const std::vector<GrayImage>& planes() const noexcept { return planes_; }
  const GrayImage& plane(std::size_t i) const { return planes_.at(i); }

  const GrayImage* find(Channel c) const noexcept {
    for (std::size_t i = 0; i < channels_.size(); ++i)
      if (channels_[i] == c) return &planes_[i];
    return nullptr;
  }

 private:
  std::vector<Channel> channels_;
  std::vector<GrayImage> planes_;
};

struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

class LandmarkSet {
 public:
  LandmarkSet() = default;
  explicit LandmarkSet(std::vector<Point2> points) : points_(std::move(points)) {
    require(!points_.empty(), ErrorCode::InvalidParameter, "landmark set must not be empty");
    for (const auto& p : points_)
      require(std::isfinite(p.u) && std::isfinite(p.v), ErrorCode::InvalidParameter, "landmarks must be finite");
  }

  std::size_t count() const noexcept { return points_.size(); }
  const std::vector<Point2>& points() const noexcept { return points_; }

 private:
  std::vector<Point2> points_;
};

}  // namespace xsynth

#endif  // XSYNTH_IMAGE_HPP
