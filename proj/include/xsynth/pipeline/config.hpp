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

#ifndef XSYNTH_PIPELINE_CONFIG_HPP
#define XSYNTH_PIPELINE_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "xsynth/crossmap.hpp"
#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/nlm.hpp"
#include "xsynth/polarimetry.hpp"
#include "xsynth/regions.hpp"
#include "xsynth/synthesis.hpp"

namespace xsynth::pipeline {

enum class Mode { Thermal, Polarimetric };

struct PipelineConfig {
  std::optional<fs::path> regions_file;  // built-in face regions when unset
  Mode mode = Mode::Thermal;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  DsiftConfig dsift;
  SynthConfig synth;
  TrainConfig train;
  bool augment_nlm = true;     // raw + NLM-filtered thermal copies during training
  bool nlm_at_inference = false;
  bool nlm_s0_only = false;
  NlmParams nlm;
  double dolp_eps = kDefaultDolpEps;
  bool signed_stokes = true;  // S1/S2 files store (s + 1) / 2

  std::optional<BBox> eval_crop;
  std::optional<fs::path> embedding_file;  // stem of <stem>.f32t / <stem>.ids
  int ssim_window = 11;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::ConfigError, "bad value '" + value + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCode::ConfigError, "bad boolean '" + value + "' for " + key);
}

}  // namespace detail

/// Flat "key = value" configuration; '#' starts a comment. Unknown keys are
/// errors. Relative paths resolve against `base_dir`.
inline PipelineConfig parse_config(const std::string& text, const fs::path& base_dir = {}) {
  using detail::parse_bool;
  using detail::parse_number;
  PipelineConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& dst) -> Setter { return [&dst](const auto& k, const auto& v) { dst = parse_number<double>(k, v); }; };
  auto count = [](std::size_t& dst) -> Setter {
    return [&dst](const auto& k, const auto& v) { dst = parse_number<std::size_t>(k, v); };
  };
  auto integer = [](int& dst) -> Setter { return [&dst](const auto& k, const auto& v) { dst = parse_number<int>(k, v); }; };
  auto flag = [](bool& dst) -> Setter { return [&dst](const auto& k, const auto& v) { dst = parse_bool(k, v); }; };

  const std::map<std::string, Setter> setters{
      {"regions", [&](const auto&, const auto& v) { c.regions_file = base_dir / v; }},
      {"mode",
       [&](const auto& k, const auto& v) {
         if (v == "thermal") c.mode = Mode::Thermal;
         else if (v == "polarimetric") c.mode = Mode::Polarimetric;
         else fail(ErrorCode::ConfigError, "bad value '" + v + "' for " + k);
       }},
      {"seed", [&](const auto& k, const auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"workers", count(c.workers)},
      {"dsift.num_orientations", integer(c.dsift.num_orientations)},
      {"dsift.cell_size", integer(c.dsift.cell_size)},
      {"dsift.grid", integer(c.dsift.grid)},
      {"dsift.stride", integer(c.dsift.stride)},
      {"dsift.clamp_threshold", real(c.dsift.clamp_threshold)},
      {"dsift.norm_eps", real(c.dsift.norm_eps)},
      {"dsift.smooth_sharpness", real(c.dsift.smooth_sharpness)},
      {"synth.lambda", [&](const auto& k, const auto& v) { c.synth.set_lambda(parse_number<double>(k, v)); }},
      {"synth.lambda_alpha", real(c.synth.lambda_alpha)},
      {"synth.lambda_tv", real(c.synth.lambda_tv)},
      {"synth.alpha", real(c.synth.alpha)},
      {"synth.tv_beta", real(c.synth.tv_beta)},
      {"synth.tv_eps", real(c.synth.tv_eps)},
      {"synth.momentum", real(c.synth.momentum)},
      {"synth.learning_rate", real(c.synth.learning_rate)},
      {"synth.iterations", count(c.synth.iterations)},
      {"synth.init",
       [&](const auto& k, const auto& v) {
         if (v == "zeros") c.synth.init_mode = InitMode::Zeros;
         else if (v == "mean") c.synth.init_mode = InitMode::Mean;
         else if (v == "noise") c.synth.init_mode = InitMode::Noise;
         else fail(ErrorCode::ConfigError, "bad value '" + v + "' for " + k);
       }},
      {"synth.nlm", flag(c.nlm_at_inference)},
      {"train.learning_rate", real(c.train.learning_rate)},
      {"train.epochs", count(c.train.epochs)},
      {"train.batch_size", count(c.train.batch_size)},
      {"train.init_scale", real(c.train.weight_init_scale)},
      {"train.augment", flag(c.augment_nlm)},
      {"nlm.patch_radius", integer(c.nlm.patch_radius)},
      {"nlm.search_radius", integer(c.nlm.search_radius)},
      {"nlm.strength", real(c.nlm.strength)},
      {"nlm.channels",
       [&](const auto& k, const auto& v) {
         if (v == "all") c.nlm_s0_only = false;
         else if (v == "s0") c.nlm_s0_only = true;
         else fail(ErrorCode::ConfigError, "bad value '" + v + "' for " + k);
       }},
      {"dolp.eps", real(c.dolp_eps)},
      {"stokes.signed", flag(c.signed_stokes)},
      {"eval.crop",
       [&](const auto& k, const auto& v) {
         if (v == "full") {
           c.eval_crop.reset();
           return;
         }
         std::istringstream in(v);
         long long x, y, w, h;
         std::string extra;
         if (!(in >> x >> y >> w >> h) || (in >> extra) || x < 0 || y < 0 || w < 1 || h < 1)
           fail(ErrorCode::ConfigError, "bad value '" + v + "' for " + k + " (expected 'x y w h' or 'full')");
         c.eval_crop = BBox{static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(w),
                            static_cast<std::size_t>(h)};
       }},
      {"eval.embedding_file", [&](const auto&, const auto& v) { c.embedding_file = base_dir / v; }},
      {"eval.ssim_window", integer(c.ssim_window)},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    it->second(key, value);
  }

  try {
    c.dsift.validate();
    c.synth.validate();
    c.train.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  if (c.workers == 0) fail(ErrorCode::ConfigError, "workers must be >= 1");
  if (c.nlm.patch_radius < 1 || c.nlm.search_radius < 1 || !(c.nlm.strength > 0.0))
    fail(ErrorCode::ConfigError, "nlm radii must be >= 1 and strength > 0");
  if (c.ssim_window < 3 || c.ssim_window % 2 == 0) fail(ErrorCode::ConfigError, "eval.ssim_window must be odd and >= 3");
  if (c.regions_file && !fs::exists(*c.regions_file))
    fail(ErrorCode::ConfigError, "regions file not found: " + c.regions_file->string());
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::ConfigError, "config file not found: " + path.string());
  return parse_config(read_file_text(path), path.parent_path());
}

}  // namespace xsynth::pipeline

#endif  // XSYNTH_PIPELINE_CONFIG_HPP
