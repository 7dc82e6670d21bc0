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

#ifndef XSYNTH_REGIONS_HPP
#define XSYNTH_REGIONS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/image.hpp"

namespace xsynth {

/// Axis-aligned box: x = left column, y = top row, w = width, h = height.
struct BBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  bool contains(std::size_t u, std::size_t v) const noexcept { return u >= y && u < y + h && v >= x && v < x + w; }
  bool inside(std::size_t height, std::size_t width) const noexcept {
    return w >= 1 && h >= 1 && x + w <= width && y + h <= height;
  }
  bool overlaps(const BBox& o) const noexcept {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Region {
  std::string id;
  BBox bbox;
  double local_weight = 1.0;
};

inline constexpr const char* kGlobalRegionId = "global";

inline void require_in_bounds(const BBox& b, std::size_t height, std::size_t width, const std::string& what) {
  require(b.inside(height, width), ErrorCode::OutOfBounds,
          what + " bbox [" + std::to_string(b.x) + " " + std::to_string(b.y) + " " + std::to_string(b.w) + " " +
              std::to_string(b.h) + "] exceeds " + std::to_string(height) + "x" + std::to_string(width) + " image");
}

inline GrayImage crop_region(const GrayImage& img, const BBox& b) {
  require_in_bounds(b, img.height(), img.width(), "crop");
  GrayImage out(b.h, b.w);
  for (std::size_t u = 0; u < b.h; ++u)
    for (std::size_t v = 0; v < b.w; ++v) out(u, v) = img(b.y + u, b.x + v);
  return out;
}

inline GrayImage crop_region(const GrayImage& img, const Region& r) { return crop_region(img, r.bbox); }

inline ThermalStack crop_region(const ThermalStack& stack, const BBox& b) {
  std::vector<GrayImage> planes;
  for (const auto& p : stack.planes()) planes.push_back(crop_region(p, b));
  return ThermalStack(stack.channels(), std::move(planes));
}

/// Adds a crop-shaped patch into `dst` at the box position.
inline void paste_add(GrayImage& dst, const GrayImage& patch, const BBox& b, double scale = 1.0) {
  require_in_bounds(b, dst.height(), dst.width(), "paste");
  require(patch.height() == b.h && patch.width() == b.w, ErrorCode::DimensionMismatch, "patch does not match bbox");
  for (std::size_t u = 0; u < b.h; ++u)
    for (std::size_t v = 0; v < b.w; ++v) dst(b.y + u, b.x + v) += scale * patch(u, v);
}

/// Global region (index 0) plus local regions, each with a per-pixel weight
/// field. The fields partition unity at every pixel.
class RegionSet {
 public:
  static constexpr double kPartitionTolerance = 1e-12;

  RegionSet(std::vector<Region> regions, std::vector<GrayImage> fields)
      : regions_(std::move(regions)), fields_(std::move(fields)) {
    require(!regions_.empty(), ErrorCode::InvalidParameter, "region set needs a global region");
    require(regions_.size() == fields_.size(), ErrorCode::DimensionMismatch, "one weight field per region");
    const auto height = fields_.front().height(), width = fields_.front().width();
    require(regions_.front().bbox == BBox{0, 0, width, height}, ErrorCode::InvalidParameter,
            "first region must cover the full image");
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      require(fields_[i].height() == height && fields_[i].width() == width, ErrorCode::DimensionMismatch,
              "weight field shape");
      require_in_bounds(regions_[i].bbox, height, width, "region '" + regions_[i].id + "'");
    }
    for (std::size_t p = 0; p < height * width; ++p) {
      double sum = 0.0;
      for (const auto& f : fields_) {
        require(f.pixels()[p] >= 0.0, ErrorCode::InvalidParameter, "weight fields must be non-negative");
        sum += f.pixels()[p];
      }
      require(std::abs(sum - 1.0) <= kPartitionTolerance, ErrorCode::InvalidParameter,
              "weight fields must sum to one at every pixel");
    }
  }

  std::size_t height() const noexcept { return fields_.front().height(); }
  std::size_t width() const noexcept { return fields_.front().width(); }
  std::size_t size() const noexcept { return regions_.size(); }
  const Region& global() const noexcept { return regions_.front(); }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  const Region& region(std::size_t i) const { return regions_.at(i); }
  const GrayImage& field(std::size_t i) const { return fields_.at(i); }

  /// Mean of a region's weight field over its own box.
  double mean_weight(std::size_t i) const {
    const auto& b = regions_.at(i).bbox;
    double sum = 0.0;
    for (std::size_t u = b.y; u < b.y + b.h; ++u)
      for (std::size_t v = b.x; v < b.x + b.w; ++v) sum += fields_[i](u, v);
    return sum / static_cast<double>(b.w * b.h);
  }

 private:
  std::vector<Region> regions_;
  std::vector<GrayImage> fields_;
};

/// Per-pixel blending weights: inside a local box the local gradient gets
/// local_weight and the global gradient the rest; outside every local box
/// only the global gradient counts.
inline RegionSet build_weight_fields(std::size_t height, std::size_t width, const std::vector<Region>& locals) {
  std::vector<Region> regions{{kGlobalRegionId, BBox{0, 0, width, height}, 1.0}};
  GrayImage global(height, width, 1.0);
  std::vector<GrayImage> fields;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    const auto& r = locals[i];
    require(r.id != kGlobalRegionId, ErrorCode::InvalidParameter, "local region may not be named 'global'");
    require_in_bounds(r.bbox, height, width, "region '" + r.id + "'");
    require(r.local_weight >= 0.0 && r.local_weight <= 1.0, ErrorCode::InvalidParameter,
            "local_weight of '" + r.id + "' must lie in [0,1]");
    for (std::size_t j = 0; j < i; ++j)
      require(!r.bbox.overlaps(locals[j].bbox), ErrorCode::OverlappingRegions,
              "regions '" + locals[j].id + "' and '" + r.id + "' overlap");
    GrayImage f(height, width, 0.0);
    for (std::size_t u = r.bbox.y; u < r.bbox.y + r.bbox.h; ++u)
      for (std::size_t v = r.bbox.x; v < r.bbox.x + r.bbox.w; ++v) {
        f(u, v) = r.local_weight;
        global(u, v) = 1.0 - r.local_weight;
      }
    regions.push_back(r);
    fields.push_back(std::move(f));
  }
  fields.insert(fields.begin(), std::move(global));
  return RegionSet(std::move(regions), std::move(fields));
}

/// Region definitions for registered 250-row x 200-column faces: both eyes and
/// the nose/mouth block.
inline std::vector<Region> default_face_regions() {
  return {
      {"right-eye", BBox{30, 89, 64, 34}, 0.95},
      {"left-eye", BBox{106, 89, 64, 34}, 0.95},
      {"nose-mouth", BBox{70, 125, 65, 85}, 0.75},
  };
}

struct RegionFile {
  std::vector<Region> locals;
  std::optional<BBox> global;  // set when the file names the global region
};

/// Parses "id x y w h local_weight" lines. Blank lines and '#' comments are
/// skipped; a line with id "global" declares the full-image region.
inline RegionFile parse_regions(const std::string& text) {
  RegionFile out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Region r;
    long long x, y, w, h;
    if (!(ls >> r.id)) continue;
    if (!(ls >> x >> y >> w >> h >> r.local_weight) || x < 0 || y < 0 || w < 1 || h < 1)
      fail(ErrorCode::ConfigError, "malformed region line " + std::to_string(lineno));
    std::string extra;
    if (ls >> extra) fail(ErrorCode::ConfigError, "trailing fields on region line " + std::to_string(lineno));
    r.bbox = BBox{static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(w),
                  static_cast<std::size_t>(h)};
    if (r.id == kGlobalRegionId) {
      out.global = r.bbox;
    } else {
      for (const auto& prev : out.locals)
        require(prev.id != r.id, ErrorCode::ConfigError, "duplicate region id '" + r.id + "'");
      out.locals.push_back(std::move(r));
    }
  }
  return out;
}

inline RegionFile load_regions(const fs::path& path) { return parse_regions(read_file_text(path)); }

inline std::string format_regions(std::size_t height, std::size_t width, const std::vector<Region>& locals) {
  std::ostringstream out;
  out << "# id x y w h local_weight\n";
  out << kGlobalRegionId << " 0 0 " << width << " " << height << " 1\n";
  for (const auto& r : locals)
    out << r.id << " " << r.bbox.x << " " << r.bbox.y << " " << r.bbox.w << " " << r.bbox.h << " " << r.local_weight
        << "\n";
  return out.str();
}

/// Resolves a parsed region file against an image size.
inline RegionSet make_region_set(const RegionFile& file, std::size_t height, std::size_t width) {
  if (file.global)
    require(*file.global == (BBox{0, 0, width, height}), ErrorCode::OutOfBounds,
            "global region must cover the full " + std::to_string(height) + "x" + std::to_string(width) + " image");
  return build_weight_fields(height, width, file.locals);
}

}  // namespace xsynth

#endif  // XSYNTH_REGIONS_HPP
