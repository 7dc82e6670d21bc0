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

#ifndef XSYNTH_DSIFT_HPP
#define XSYNTH_DSIFT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/image.hpp"
#include "xsynth/tensor_io.hpp"

namespace xsynth {

struct DsiftConfig {
  int num_orientations = 8;
  int cell_size = 4;
  int grid = 4;  // cells per descriptor side
  int stride = 4;
  double clamp_threshold = 0.2;
  double norm_eps = 1e-8;
  double smooth_sharpness = 50.0;

  std::size_t descriptor_size() const noexcept {
    return static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid) *
           static_cast<std::size_t>(num_orientations);
  }
  std::size_t footprint() const noexcept { return static_cast<std::size_t>(grid) * static_cast<std::size_t>(cell_size); }

  void validate() const {
    require(num_orientations >= 2, ErrorCode::InvalidParameter, "num_orientations must be >= 2");
    require(cell_size >= 1 && grid >= 1 && stride >= 1, ErrorCode::InvalidParameter,
            "cell_size, grid and stride must be >= 1");
    require(clamp_threshold > 0.0 && clamp_threshold <= 1.0, ErrorCode::InvalidParameter,
            "clamp_threshold must lie in (0,1]");
    require(norm_eps > 0.0, ErrorCode::InvalidParameter, "norm_eps must be > 0");
    require(smooth_sharpness > 0.0, ErrorCode::InvalidParameter, "smooth_sharpness must be > 0");
  }

  /// Number of valid descriptor placements along an axis of the given length,
  /// or 0 if none fits.
  std::size_t placements(std::size_t extent) const noexcept {
    if (extent < footprint()) return 0;
    return (extent - footprint()) / static_cast<std::size_t>(stride) + 1;
  }
};

/// Dense H' x W' x D grid of descriptors, row-major with depth fastest.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t rows, std::size_t cols, std::size_t depth, double fill = 0.0)
      : rows_(rows), cols_(cols), depth_(depth), data_(rows * cols * depth, fill) {}
  FeatureMap(std::size_t rows, std::size_t cols, std::size_t depth, std::vector<double> data)
      : rows_(rows), cols_(cols), depth_(depth), data_(std::move(data)) {
    require(data_.size() == rows * cols * depth, ErrorCode::DimensionMismatch, "feature map data length");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t locations() const noexcept { return rows_ * cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> at(std::size_t r, std::size_t c) noexcept { return {data_.data() + (r * cols_ + c) * depth_, depth_}; }
  std::span<const double> at(std::size_t r, std::size_t c) const noexcept {
    return {data_.data() + (r * cols_ + c) * depth_, depth_};
  }
  std::span<double> location(std::size_t i) noexcept { return {data_.data() + i * depth_, depth_}; }
  std::span<const double> location(std::size_t i) const noexcept { return {data_.data() + i * depth_, depth_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const FeatureMap& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_ && depth_ == o.depth_;
  }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0, depth_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const FeatureMap& f) {
  return std::to_string(f.rows()) + "x" + std::to_string(f.cols()) + "x" + std::to_string(f.depth());
}

inline void require_same_shape(const FeatureMap& a, const FeatureMap& b, const std::string& what) {
  require(a.same_shape(b), ErrorCode::DimensionMismatch, what + ": " + shape_string(a) + " vs " + shape_string(b));
}

inline F32Tensor to_tensor(const FeatureMap& f) {
  F32Tensor t;
  t.dims = {static_cast<std::uint32_t>(f.rows()), static_cast<std::uint32_t>(f.cols()),
            static_cast<std::uint32_t>(f.depth())};
  t.values.assign(f.values().begin(), f.values().end());
  return t;
}

inline FeatureMap feature_map_from_tensor(const F32Tensor& t) {
  require(t.dims.size() == 3, ErrorCode::DimensionMismatch, "feature map tensor must have rank 3");
  return FeatureMap(t.dims[0], t.dims[1], t.dims[2], std::vector<double>(t.values.begin(), t.values.end()));
}

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Smooth stand-in for min(x, t): exactly 0 at 0, unit slope below t,
/// saturating at t over a transition of width about t / sharpness.
struct SoftClamp {
  double threshold;
  double sharpness;

  double rate() const noexcept { return sharpness / threshold; }
  double operator()(double x) const noexcept { return (softplus(sharpness) - softplus(sharpness - rate() * x)) / rate(); }
  double derivative(double x) const noexcept { return sigmoid(sharpness - rate() * x); }
};

/// y = z / (|z| + eps), backward: accumulates dL/dz into gz.
inline void normalize_backward(std::span<const double> z, double norm, double eps, std::span<const double> gy,
                               std::span<double> gz) {
  const double denom = norm + eps;
  double dot = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) dot += gy[i] * z[i];
  const double coupling = norm > 0.0 ? dot / (norm * denom * denom) : 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) gz[i] = gy[i] / denom - z[i] * coupling;
}

inline double l2_norm(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// Forward evaluation of the dense SIFT network that keeps every intermediate
/// needed for the exact vector-Jacobian product.
///
/// Stages:
///   1. centred-difference image gradients, replicate boundary;
///   2. gradient magnitude split between the two nearest orientation bins by
///      linear angular interpolation;
///   3. bilinear pooling of each orientation plane into grid x grid cells,
///      restricted to the descriptor footprint;
///   4. L2 normalisation, soft clamp, L2 renormalisation.
class DsiftTape {
 public:
  DsiftTape(const GrayImage& img, const DsiftConfig& cfg) : cfg_(cfg), height_(img.height()), width_(img.width()) {
    cfg_.validate();
    rows_ = cfg_.placements(height_);
    cols_ = cfg_.placements(width_);
    if (rows_ == 0 || cols_ == 0)
      fail(ErrorCode::ImageTooSmall, std::to_string(height_) + "x" + std::to_string(width_) +
                                         " image is smaller than the " + std::to_string(cfg_.footprint()) +
                                         "-pixel descriptor footprint");
    build_cell_weights();
    compute_gradients(img);
    compute_orientation_planes();
    pool();
    normalize();
  }

  const FeatureMap& features() const noexcept { return out_; }
  const DsiftConfig& config() const noexcept { return cfg_; }

  GrayImage backward(const FeatureMap& upstream) const {
    require(upstream.rows() == rows_ && upstream.cols() == cols_ && upstream.depth() == cfg_.descriptor_size(),
            ErrorCode::DimensionMismatch, "dsift upstream gradient " + shape_string(upstream) + " vs " + shape_string(out_));
    const std::size_t D = cfg_.descriptor_size();
    const std::size_t K = static_cast<std::size_t>(cfg_.num_orientations);
    const std::size_t G = static_cast<std::size_t>(cfg_.grid);
    const detail::SoftClamp clamp{cfg_.clamp_threshold, cfg_.smooth_sharpness};

    // stage 4
    std::vector<double> graw(raw_.size());
    std::vector<double> gb(D), ga(D);
    for (std::size_t loc = 0; loc < rows_ * cols_; ++loc) {
      std::span<const double> raw(raw_.data() + loc * D, D), a(unit_.data() + loc * D, D),
          b(clamped_.data() + loc * D, D);
      detail::normalize_backward(b, clamped_norm_[loc], cfg_.norm_eps, upstream.location(loc), gb);
      for (std::size_t d = 0; d < D; ++d) gb[d] *= clamp.derivative(a[d]);
      detail::normalize_backward(raw, raw_norm_[loc], cfg_.norm_eps, gb, std::span<double>(graw.data() + loc * D, D));
    }

    // stage 3, transposed: cells -> horizontally pooled rows -> planes
    const std::size_t stride = static_cast<std::size_t>(cfg_.stride);
    std::vector<double> gpooled(pooled_.size(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) {
        const double* gv = graw.data() + (r * cols_ + c) * D;
        for (std::size_t i = 0; i < G; ++i)
          for (const auto& [p, wgt] : cell_taps_[i]) {
            const std::size_t u = r * stride + p;
            for (std::size_t j = 0; j < G; ++j)
              for (std::size_t k = 0; k < K; ++k) gpooled[pooled_index(k, u, c, j)] += wgt * gv[(i * G + j) * K + k];
          }
      }
    std::vector<double> gplanes(planes_.size(), 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t u = 0; u < height_; ++u)
        for (std::size_t c = 0; c < cols_; ++c)
          for (std::size_t j = 0; j < G; ++j) {
            const double g = gpooled[pooled_index(k, u, c, j)];
            if (g == 0.0) continue;
            for (const auto& [q, wgt] : cell_taps_[j]) gplanes[(k * height_ + u) * width_ + c * stride + q] += wgt * g;
          }

    // stage 2
    const double bins_per_radian = static_cast<double>(K) / (2.0 * std::numbers::pi);
    const std::size_t npix = height_ * width_;
    GrayImage grad(height_, width_, 0.0);
    for (std::size_t i = 0; i < npix; ++i) {
      const double m = mag_[i];
      if (m == 0.0) continue;
      const double g0 = gplanes[bin_[i] * npix + i];
      const double g1 = gplanes[((bin_[i] + 1) % K) * npix + i];
      const double dmag = g0 * (1.0 - frac_[i]) + g1 * frac_[i];
      const double dtheta = m * bins_per_radian * (g1 - g0);
      const double gx = gx_[i], gy = gy_[i];
      // d|g|/dgx = gx/m, dtheta/dgx = -gy/m^2, dtheta/dgy = gx/m^2
      const double dgx = dmag * gx / m - dtheta * gy / (m * m);
      const double dgy = dmag * gy / m + dtheta * gx / (m * m);
      // stage 1: gx = (x[v+1] - x[v-1]) / 2, gy likewise along rows
      const std::size_t u = i / width_, v = i % width_;
      const std::size_t vp = std::min(v + 1, width_ - 1), vm = v == 0 ? 0 : v - 1;
      const std::size_t up = std::min(u + 1, height_ - 1), um = u == 0 ? 0 : u - 1;
      grad(u, vp) += 0.5 * dgx;
      grad(u, vm) -= 0.5 * dgx;
      grad(up, v) += 0.5 * dgy;
      grad(um, v) -= 0.5 * dgy;
    }
    return grad;
  }

 private:
  struct Tap {
    std::size_t offset;
    double weight;
  };

  std::size_t pooled_index(std::size_t k, std::size_t u, std::size_t c, std::size_t j) const noexcept {
    return ((k * height_ + u) * cols_ + c) * static_cast<std::size_t>(cfg_.grid) + j;
  }

  // Triangular weight of footprint offset p for cell i, centred at the cell's
  // pixel-space midpoint.
  void build_cell_weights() {
    const double cell = cfg_.cell_size;
    cell_taps_.resize(static_cast<std::size_t>(cfg_.grid));
    for (std::size_t i = 0; i < cell_taps_.size(); ++i) {
      const double centre = (static_cast<double>(i) + 0.5) * cell - 0.5;
      for (std::size_t p = 0; p < cfg_.footprint(); ++p) {
        const double w = 1.0 - std::abs(static_cast<double>(p) - centre) / cell;
        if (w > 0.0) cell_taps_[i].push_back({p, w});
      }
    }
  }

  void compute_gradients(const GrayImage& img) {
    gx_.resize(img.size());
    gy_.resize(img.size());
    mag_.resize(img.size());
    for (std::size_t u = 0; u < height_; ++u)
      for (std::size_t v = 0; v < width_; ++v) {
        const auto su = static_cast<std::ptrdiff_t>(u), sv = static_cast<std::ptrdiff_t>(v);
        const double gx = 0.5 * (img.clamped(su, sv + 1) - img.clamped(su, sv - 1));
        const double gy = 0.5 * (img.clamped(su + 1, sv) - img.clamped(su - 1, sv));
        const std::size_t i = u * width_ + v;
        gx_[i] = gx;
        gy_[i] = gy;
        mag_[i] = std::hypot(gx, gy);
      }
  }

  void compute_orientation_planes() {
    const std::size_t K = static_cast<std::size_t>(cfg_.num_orientations);
    const std::size_t npix = height_ * width_;
    const double bins_per_radian = static_cast<double>(K) / (2.0 * std::numbers::pi);
    planes_.assign(K * npix, 0.0);
    bin_.assign(npix, 0);
    frac_.assign(npix, 0.0);
    for (std::size_t i = 0; i < npix; ++i) {
      if (mag_[i] == 0.0) continue;
      double b = std::atan2(gy_[i], gx_[i]) * bins_per_radian;
      if (b < 0.0) b += static_cast<double>(K);
      double lower = std::floor(b);
      double f = b - lower;
      auto k0 = static_cast<std::size_t>(lower);
      if (k0 >= K) k0 -= K;
      bin_[i] = k0;
      frac_[i] = f;
      planes_[k0 * npix + i] += mag_[i] * (1.0 - f);
      planes_[((k0 + 1) % K) * npix + i] += mag_[i] * f;
    }
  }

  // Separable pooling: first along columns into per-descriptor-column cells,
  // then along rows.
  void pool() {
    const std::size_t K = static_cast<std::size_t>(cfg_.num_orientations);
    const std::size_t G = static_cast<std::size_t>(cfg_.grid);
    const std::size_t D = cfg_.descriptor_size();
    const std::size_t stride = static_cast<std::size_t>(cfg_.stride);
    pooled_.assign(K * height_ * cols_ * G, 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t u = 0; u < height_; ++u) {
        const double* row = planes_.data() + (k * height_ + u) * width_;
        for (std::size_t c = 0; c < cols_; ++c)
          for (std::size_t j = 0; j < G; ++j) {
            double acc = 0.0;
            for (const auto& [q, wgt] : cell_taps_[j]) acc += wgt * row[c * stride + q];
            pooled_[pooled_index(k, u, c, j)] = acc;
          }
      }
    raw_.assign(rows_ * cols_ * D, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) {
        double* desc = raw_.data() + (r * cols_ + c) * D;
        for (std::size_t i = 0; i < G; ++i)
          for (std::size_t j = 0; j < G; ++j)
            for (std::size_t k = 0; k < K; ++k) {
              double acc = 0.0;
              for (const auto& [p, wgt] : cell_taps_[i]) acc += wgt * pooled_[pooled_index(k, r * stride + p, c, j)];
              desc[(i * G + j) * K + k] = acc;
            }
      }
  }

  void normalize() {
    const std::size_t D = cfg_.descriptor_size();
    const std::size_t n = rows_ * cols_;
    const detail::SoftClamp clamp{cfg_.clamp_threshold, cfg_.smooth_sharpness};
    unit_.resize(raw_.size());
    clamped_.resize(raw_.size());
    raw_norm_.resize(n);
    clamped_norm_.resize(n);
    out_ = FeatureMap(rows_, cols_, D);
    for (std::size_t loc = 0; loc < n; ++loc) {
      std::span<const double> raw(raw_.data() + loc * D, D);
      raw_norm_[loc] = detail::l2_norm(raw);
      for (std::size_t d = 0; d < D; ++d) {
        unit_[loc * D + d] = raw[d] / (raw_norm_[loc] + cfg_.norm_eps);
        clamped_[loc * D + d] = clamp(unit_[loc * D + d]);
      }
      clamped_norm_[loc] = detail::l2_norm(std::span<const double>(clamped_.data() + loc * D, D));
      auto dst = out_.location(loc);
      for (std::size_t d = 0; d < D; ++d) dst[d] = clamped_[loc * D + d] / (clamped_norm_[loc] + cfg_.norm_eps);
    }
  }

  DsiftConfig cfg_;
  std::size_t height_, width_;
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::vector<Tap>> cell_taps_;
  std::vector<double> gx_, gy_, mag_;
  std::vector<std::size_t> bin_;
  std::vector<double> frac_;
  std::vector<double> planes_;   // K x h x w
  std::vector<double> pooled_;   // K x h x W' x grid
  std::vector<double> raw_, unit_, clamped_;
  std::vector<double> raw_norm_, clamped_norm_;
  FeatureMap out_;
};

inline FeatureMap dsift_forward(const GrayImage& img, const DsiftConfig& cfg = {}) {
  return DsiftTape(img, cfg).features();
}

inline GrayImage dsift_backward(const GrayImage& img, const DsiftConfig& cfg, const FeatureMap& upstream) {
  return DsiftTape(img, cfg).backward(upstream);
}

/// Per-channel descriptors of a thermal stack concatenated along depth
/// (channel-major at each location).
inline FeatureMap dsift_forward(const ThermalStack& stack, const DsiftConfig& cfg = {}) {
  if (stack.channel_count() == 1) return dsift_forward(stack.plane(0), cfg);
  std::vector<FeatureMap> per;
  for (const auto& p : stack.planes()) per.push_back(dsift_forward(p, cfg));
  const std::size_t D = cfg.descriptor_size();
  FeatureMap out(per[0].rows(), per[0].cols(), D * per.size());
  for (std::size_t loc = 0; loc < out.locations(); ++loc)
    for (std::size_t ch = 0; ch < per.size(); ++ch)
      std::copy_n(per[ch].location(loc).begin(), D, out.location(loc).begin() + static_cast<std::ptrdiff_t>(ch * D));
  return out;
}

}  // namespace xsynth

#endif  // XSYNTH_DSIFT_HPP
