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

#ifndef XSYNTH_TENSOR_IO_HPP
#define XSYNTH_TENSOR_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"

namespace xsynth {

// F32T layout: "F32T", u32 rank, rank x u32 dims, then prod(dims) IEEE-754
// binary32 values, all little-endian, row-major.

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

struct F32Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t d) { return a * d; });
  }
};

inline constexpr char kF32TMagic[4] = {'F', '3', '2', 'T'};

inline void append_f32t(std::vector<std::uint8_t>& out, std::span<const std::uint32_t> dims,
                        std::span<const float> values) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  require(n == values.size(), ErrorCode::DimensionMismatch, "tensor dims do not match value count");
  auto put = [&](const void* p, std::size_t len) {
    auto b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + len);
  };
  put(kF32TMagic, 4);
  const auto rank = static_cast<std::uint32_t>(dims.size());
  put(&rank, 4);
  put(dims.data(), 4 * dims.size());
  put(values.data(), 4 * values.size());
}

/// Reads one tensor starting at `pos`, advancing it past the tensor.
inline F32Tensor read_f32t(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  auto take = [&](void* dst, std::size_t len) {
    if (pos > bytes.size() || bytes.size() - pos < len) fail(ErrorCode::CorruptFile, "truncated F32T tensor");
    std::memcpy(dst, bytes.data() + pos, len);
    pos += len;
  };
  char magic[4];
  take(magic, 4);
  if (std::memcmp(magic, kF32TMagic, 4) != 0) fail(ErrorCode::CorruptFile, "bad F32T magic");
  std::uint32_t rank = 0;
  take(&rank, 4);
  if (rank > 8) fail(ErrorCode::CorruptFile, "implausible F32T rank " + std::to_string(rank));
  F32Tensor t;
  t.dims.resize(rank);
  take(t.dims.data(), 4 * std::size_t{rank});
  const std::size_t available = (bytes.size() - pos) / 4;
  std::size_t n = 1;
  for (auto d : t.dims) {
    if (d != 0 && n > available / d) fail(ErrorCode::CorruptFile, "truncated F32T payload");
    n *= d;
  }
  t.values.resize(n);
  take(t.values.data(), 4 * n);
  return t;
}

inline void save_f32t(const fs::path& path, const F32Tensor& t) {
  std::vector<std::uint8_t> out;
  append_f32t(out, t.dims, t.values);
  write_file_atomic(path, out);
}

inline F32Tensor load_f32t(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto t = read_f32t(bytes, pos);
  if (pos != bytes.size()) fail(ErrorCode::CorruptFile, "trailing bytes after tensor in " + path.string());
  return t;
}

}  // namespace xsynth

#endif  // XSYNTH_TENSOR_IO_HPP
