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

#include <cstring>
#include <random>

#include "test_util.hpp"
#include "xsynth/dsift.hpp"
#include "xsynth/tensor_io.hpp"

using namespace xsynth;

TEST(F32T, ByteLayout) {
  std::vector<std::uint8_t> out;
  const std::uint32_t dims[] = {2, 1};
  const float values[] = {1.0f, -2.5f};
  append_f32t(out, dims, values);
  ASSERT_EQ(out.size(), 4u + 4u + 8u + 8u);
  EXPECT_EQ(std::memcmp(out.data(), "F32T", 4), 0);
  // little-endian u32 rank = 2
  EXPECT_EQ(out[4], 2);
  EXPECT_EQ(out[5], 0);
  EXPECT_EQ(out[8], 2);
  EXPECT_EQ(out[12], 1);
  float back;
  std::memcpy(&back, out.data() + 20, 4);
  EXPECT_EQ(back, -2.5f);
}

TEST(F32T, RoundTripAndErrors) {
  const auto dir = xsynth::testing::scratch_dir("f32t");
  F32Tensor t{{3, 4, 2}, {}};
  for (int i = 0; i < 24; ++i) t.values.push_back(static_cast<float>(i) * 0.25f - 1.0f);
  save_f32t(dir / "t.f32t", t);
  const auto back = load_f32t(dir / "t.f32t");
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.values, t.values);

  auto bytes = read_file_bytes(dir / "t.f32t");
  for (std::size_t cut : {std::size_t{2}, std::size_t{9}, bytes.size() - 1}) {
    write_file_atomic(dir / "cut.f32t", std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
    EXPECT_XSYNTH_ERROR(load_f32t(dir / "cut.f32t"), ErrorCode::CorruptFile);
  }
  bytes[0] = 'X';
  write_file_atomic(dir / "magic.f32t", bytes);
  EXPECT_XSYNTH_ERROR(load_f32t(dir / "magic.f32t"), ErrorCode::CorruptFile);

  // absurd dims must not overflow into a small allocation
  std::vector<std::uint8_t> huge;
  const std::uint32_t dims[] = {1};
  const float v[] = {0.0f};
  append_f32t(huge, dims, v);
  huge[4] = 3;
  huge.resize(8);
  for (int i = 0; i < 3; ++i)
    for (int b = 0; b < 4; ++b) huge.push_back(0xff);
  std::size_t pos = 0;
  EXPECT_XSYNTH_ERROR(read_f32t(huge, pos), ErrorCode::CorruptFile);
}

TEST(F32T, FeatureMapRoundTrip) {
  std::mt19937_64 rng(1);
  auto f = xsynth::testing::random_features(3, 2, 5, rng);
  for (auto& x : f.values()) x = static_cast<float>(x);  // representable exactly
  EXPECT_EQ(feature_map_from_tensor(to_tensor(f)), f);
  EXPECT_XSYNTH_ERROR(feature_map_from_tensor(F32Tensor{{2, 2}, {0, 0, 0, 0}}), ErrorCode::DimensionMismatch);
}
