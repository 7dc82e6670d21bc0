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

#ifndef XSYNTH_IMAGE_IO_HPP
#define XSYNTH_IMAGE_IO_HPP

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/image.hpp"

namespace xsynth {

/// Maps an intensity to an integer code: clamp to [0,1], scale, round half
/// away from zero.
inline std::uint32_t quantize(double x, std::uint32_t max_code) {
  double c = std::clamp(x, 0.0, 1.0) * static_cast<double>(max_code);
  return static_cast<std::uint32_t>(std::round(c));
}

namespace detail {

inline GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::uint64_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail(ErrorCode::CorruptImage, "bad PGM header in " + name);
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1u << 30)) fail(ErrorCode::CorruptImage, "PGM header value too large in " + name);
    }
    return v;
  };
  const auto width = read_uint();
  const auto height = read_uint();
  const auto maxval = read_uint();
  if (width == 0 || height == 0) fail(ErrorCode::CorruptImage, "zero PGM dimension in " + name);
  if (maxval == 0 || maxval > 65535) fail(ErrorCode::UnsupportedFormat, "PGM maxval out of range in " + name);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(ErrorCode::CorruptImage, "bad PGM header in " + name);
  ++pos;

  const std::size_t bpp = maxval < 256 ? 1 : 2;
  const std::size_t n = width * height;
  if (bytes.size() - pos < n * bpp) fail(ErrorCode::CorruptImage, "truncated PGM data in " + name);
  std::vector<double> data(n);
  const double max_code = static_cast<double>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t code = bpp == 1 ? bytes[pos + i] : (std::uint32_t{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1];
    if (code > maxval) fail(ErrorCode::CorruptImage, "PGM sample exceeds maxval in " + name);
    data[i] = code / max_code;
  }
  return GrayImage(height, width, std::move(data));
}

struct PngReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + count > cur->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes->data() + cur->pos, count);
  cur->pos += count;
}

inline void png_write_to_memory(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

inline void png_flush_noop(png_structp) {}

inline GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }
  PngReadCursor cursor{&bytes, 0};
  // Buffers are held through raw pointers: a longjmp out of libpng must not
  // skip any destructor.
  std::vector<double>* staged = new std::vector<double>();
  std::vector<png_byte>* row = new std::vector<png_byte>();
  png_uint_32 width = 0, height = 0;
  int color_type = 0;
  bool unsupported = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    delete staged;
    delete row;
    fail(ErrorCode::CorruptImage, "cannot decode PNG " + name);
  }
  png_set_read_fn(png, &cursor, png_read_from_memory);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  color_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_GRAY_ALPHA) {
    unsupported = true;
  } else {
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian order
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    row->resize(rowbytes);
    staged->resize(static_cast<std::size_t>(width) * height);
    const double max_code = depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 r = 0; r < height; ++r) {
      png_read_row(png, row->data(), nullptr);
      for (png_uint_32 c = 0; c < width; ++c) {
        std::uint32_t code;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, row->data() + 2 * c, 2);
          code = s;
        } else {
          code = (*row)[c];
        }
        (*staged)[static_cast<std::size_t>(r) * width + c] = code / max_code;
      }
    }
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::vector<double> data = std::move(*staged);
  delete staged;
  delete row;
  if (unsupported) fail(ErrorCode::UnsupportedFormat, "PNG is not grayscale: " + name);
  return GrayImage(height, width, std::move(data));
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img, int depth) {
  const std::uint32_t maxval = depth == 16 ? 65535 : 255;
  std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" +
                       std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size() * (depth == 16 ? 2 : 1));
  for (double x : img.pixels()) {
    auto code = quantize(x, maxval);
    if (depth == 16) out.push_back(static_cast<std::uint8_t>(code >> 8));
    out.push_back(static_cast<std::uint8_t>(code & 0xFF));
  }
  return out;
}

inline std::vector<std::uint8_t> encode_png(const GrayImage& img, int depth) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  const std::size_t bpp = depth == 16 ? 2 : 1;
  std::vector<png_byte> row(img.width() * bpp);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::uint32_t maxval = depth == 16 ? 65535 : 255;
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      auto code = quantize(img(r, c), maxval);
      if (depth == 16) {
        row[2 * c] = static_cast<png_byte>(code >> 8);  // PNG samples are big-endian
        row[2 * c + 1] = static_cast<png_byte>(code & 0xFF);
      } else {
        row[c] = static_cast<png_byte>(code);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline bool has_png_extension(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace detail

/// Loads an 8- or 16-bit grayscale PGM (P5) or PNG, scaling codes to [0,1].
/// The format is sniffed from the file contents, not the extension.
inline GrayImage load_image(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, bytes.begin()))
    return detail::decode_png(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return detail::decode_pgm(bytes, path.string());
  fail(ErrorCode::UnsupportedFormat, "not a binary PGM or PNG: " + path.string());
}

/// Saves as PNG when the extension is .png, otherwise as binary PGM.
/// Intensities outside [0,1] are clamped.
inline void save_image(const GrayImage& img, const fs::path& path, int depth = 8) {
  require(depth == 8 || depth == 16, ErrorCode::InvalidParameter, "depth must be 8 or 16");
  auto bytes = detail::has_png_extension(path) ? detail::encode_png(img, depth) : detail::encode_pgm(img, depth);
  write_file_atomic(path, bytes);
}

}  // namespace xsynth

#endif  // XSYNTH_IMAGE_IO_HPP
