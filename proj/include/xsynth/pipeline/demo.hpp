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

#ifndef XSYNTH_PIPELINE_DEMO_HPP
#define XSYNTH_PIPELINE_DEMO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/fileio.hpp"
#include "xsynth/image.hpp"
#include "xsynth/image_io.hpp"
#include "xsynth/metrics.hpp"
#include "xsynth/pipeline/commands.hpp"
#include "xsynth/pipeline/manifest.hpp"
#include "xsynth/random.hpp"
#include "xsynth/regions.hpp"

namespace xsynth::pipeline {

struct DemoOptions {
  std::size_t subjects = 8;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDemoHeight = 250;
inline constexpr std::size_t kDemoWidth = 200;

namespace demo {

// Geometry of one synthetic face. Coordinates are (row, column) in pixels.
struct Face {
  double bg, skin, hair_tone, hairline;
  double cu, cv, ru, rv;
  double eye_u[2], eye_v[2], eye_hw, eye_hh, iris_r, iris_tone;
  double brow_du, brow_half, brow_thick, brow_tilt, brow_tone;
  double nose_top, nose_tip, nose_w;
  double mouth_u, mouth_hw, lip_thick, lip_tone, mouth_open;
  struct Blob {
    double u, v, sigma, amp;
  };
  std::vector<Blob> blobs;
};

inline Face random_face(Rng& rng) {
  Face f;
  f.bg = rng.uniform(0.15, 0.3);
  f.skin = rng.uniform(0.55, 0.75);
  f.hair_tone = rng.uniform(0.05, 0.2);
  // the head outline barely varies: faces are registered, and identity
  // lives in the inner features
  f.hairline = rng.uniform(40.0, 46.0);
  f.cu = 128.0 + rng.uniform(-1.5, 1.5);
  f.cv = 100.0 + rng.uniform(-1.5, 1.5);
  f.ru = rng.uniform(100.0, 104.0);
  f.rv = rng.uniform(76.0, 80.0);
  for (int s = 0; s < 2; ++s) {
    f.eye_u[s] = 106.0 + rng.uniform(-3.0, 3.0);
    f.eye_v[s] = (s == 0 ? 62.0 : 138.0) + rng.uniform(-4.0, 4.0);
  }
  f.eye_hw = rng.uniform(10.0, 15.0);
  f.eye_hh = rng.uniform(4.0, 7.0);
  f.iris_r = rng.uniform(3.5, 5.5);
  f.iris_tone = rng.uniform(0.05, 0.3);
  f.brow_du = rng.uniform(13.0, 19.0);
  f.brow_half = rng.uniform(12.0, 18.0);
  f.brow_thick = rng.uniform(2.0, 4.5);
  f.brow_tilt = rng.uniform(-0.25, 0.25);
  f.brow_tone = rng.uniform(0.1, 0.35);
  f.nose_top = 115.0;
  f.nose_tip = rng.uniform(155.0, 170.0);
  f.nose_w = rng.uniform(8.0, 14.0);
  f.mouth_u = rng.uniform(185.0, 198.0);
  f.mouth_hw = rng.uniform(14.0, 24.0);
  f.lip_thick = rng.uniform(3.0, 6.0);
  f.lip_tone = rng.uniform(0.2, 0.4);
  f.mouth_open = 0.0;
  for (int b = 0; b < 6; ++b) {
    Face::Blob blob;
    blob.u = f.cu + rng.uniform(-0.6, 0.6) * f.ru;
    blob.v = f.cv + rng.uniform(-0.6, 0.6) * f.rv;
    blob.sigma = rng.uniform(4.0, 10.0);
    blob.amp = rng.uniform(-0.15, 0.15);
    f.blobs.push_back(blob);
  }
  return f;
}

/// Expression variant: wider, open mouth and raised brows.
inline Face with_expression(Face f) {
  f.mouth_hw *= 1.25;
  f.mouth_open = 4.0;
  f.brow_du += 3.0;
  return f;
}

// Antialiased coverage from a signed distance (negative inside).
inline double cover(double d) { return std::clamp(0.5 - d, 0.0, 1.0); }

inline double ellipse_distance(double u, double v, double cu, double cv, double ru, double rv) {
  const double r = std::hypot((u - cu) / ru, (v - cv) / rv);
  return (r - 1.0) * std::min(ru, rv);
}

inline double segment_distance(double u, double v, double u0, double v0, double u1, double v1) {
  const double du = u1 - u0, dv = v1 - v0;
  const double t = std::clamp(((u - u0) * du + (v - v0) * dv) / (du * du + dv * dv), 0.0, 1.0);
  return std::hypot(u - (u0 + t * du), v - (v0 + t * dv));
}

inline void brow_ends(const Face& f, int s, double& u0, double& v0, double& u1, double& v1) {
  const double sign = s == 0 ? 1.0 : -1.0;
  const double cu = f.eye_u[s] - f.brow_du, cv = f.eye_v[s];
  u0 = cu - sign * f.brow_tilt * f.brow_half;
  v0 = cv - f.brow_half;
  u1 = cu + sign * f.brow_tilt * f.brow_half;
  v1 = cv + f.brow_half;
}

// hair: band above a curved hairline, within the head outline
inline double hair_cover(const Face& f, double u, double v) {
  const double line = f.hairline + 0.004 * (v - f.cv) * (v - f.cv);
  return cover(u - line) * cover(ellipse_distance(u, v, f.cu - 6.0, f.cv, f.ru + 8.0, f.rv + 8.0));
}

inline GrayImage render_visible(const Face& f, std::size_t h, std::size_t w) {
  GrayImage img(h, w, f.bg);
  for (std::size_t iu = 0; iu < h; ++iu)
    for (std::size_t iv = 0; iv < w; ++iv) {
      const double u = static_cast<double>(iu), v = static_cast<double>(iv);
      double x = f.bg;
      const double face = cover(ellipse_distance(u, v, f.cu, f.cv, f.ru, f.rv));
      double skin = f.skin;
      for (const auto& b : f.blobs) {
        const double r2 = ((u - b.u) * (u - b.u) + (v - b.v) * (v - b.v)) / (b.sigma * b.sigma);
        skin += b.amp * std::exp(-0.5 * r2);
      }
      x = x * (1.0 - face) + skin * face;

      const double hair = hair_cover(f, u, v);
      x = x * (1.0 - hair) + f.hair_tone * hair;

      for (int s = 0; s < 2; ++s) {
        const double eye = cover(ellipse_distance(u, v, f.eye_u[s], f.eye_v[s], f.eye_hh, f.eye_hw));
        x = x * (1.0 - eye) + 0.85 * eye;
        const double iris = cover(std::hypot(u - f.eye_u[s], v - f.eye_v[s]) - f.iris_r) * eye;
        x = x * (1.0 - iris) + f.iris_tone * iris;
        double u0, v0, u1, v1;
        brow_ends(f, s, u0, v0, u1, v1);
        const double brow = cover(segment_distance(u, v, u0, v0, u1, v1) - f.brow_thick);
        x = x * (1.0 - brow) + f.brow_tone * brow;
      }

      // nose: shaded side line and two nostrils
      const double side = cover(segment_distance(u, v, f.nose_top, f.cv + 3.0, f.nose_tip, f.cv + f.nose_w * 0.6) - 1.2);
      x -= 0.12 * side;
      for (double sgn : {-1.0, 1.0}) {
        const double nostril = cover(ellipse_distance(u, v, f.nose_tip + 2.0, f.cv + sgn * f.nose_w * 0.5, 2.5, 3.5));
        x = x * (1.0 - nostril) + 0.2 * nostril;
      }

      const double lips =
          cover(ellipse_distance(u, v, f.mouth_u, f.cv, f.lip_thick + f.mouth_open * 0.5, f.mouth_hw));
      x = x * (1.0 - lips) + f.lip_tone * lips;
      if (f.mouth_open > 0.0) {
        const double gap = cover(ellipse_distance(u, v, f.mouth_u, f.cv, f.mouth_open * 0.5, f.mouth_hw * 0.8));
        x = x * (1.0 - gap) + 0.05 * gap;
      }
      img(iu, iv) = std::clamp(x, 0.0, 1.0);
    }
  return img;
}

inline LandmarkSet face_landmarks(const Face& f) {
  std::vector<Point2> p;
  const double pi = std::numbers::pi;
  for (int k = 0; k < 17; ++k) {  // jaw, ear to ear through the chin
    const double a = -pi / 2 + pi * k / 16.0;
    p.push_back({f.cu + f.ru * std::cos(a), f.cv + f.rv * std::sin(a)});
  }
  for (int s = 0; s < 2; ++s) {
    double u0, v0, u1, v1;
    brow_ends(f, s, u0, v0, u1, v1);
    for (int k = 0; k < 5; ++k) p.push_back({u0 + (u1 - u0) * k / 4.0, v0 + (v1 - v0) * k / 4.0});
  }
  for (int k = 0; k < 4; ++k) p.push_back({f.nose_top + (f.nose_tip - f.nose_top) * k / 3.0, f.cv});
  for (int k = 0; k < 5; ++k) p.push_back({f.nose_tip + 2.0, f.cv + f.nose_w * (k - 2) / 2.0});
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 6; ++k) {
      const double a = pi + 2.0 * pi * k / 6.0;
      p.push_back({f.eye_u[s] + f.eye_hh * std::sin(a), f.eye_v[s] + f.eye_hw * std::cos(a)});
    }
  const double lip_h = f.lip_thick + f.mouth_open * 0.5;
  for (int k = 0; k < 12; ++k) {
    const double a = pi + 2.0 * pi * k / 12.0;
    p.push_back({f.mouth_u + lip_h * std::sin(a), f.cv + f.mouth_hw * std::cos(a)});
  }
  for (int k = 0; k < 8; ++k) {
    const double a = pi + 2.0 * pi * k / 8.0;
    p.push_back({f.mouth_u + f.mouth_open * 0.5 * std::sin(a), f.cv + f.mouth_hw * 0.8 * std::cos(a)});
  }
  return LandmarkSet(std::move(p));
}

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& x : k) x /= sum;
  const auto h = static_cast<std::ptrdiff_t>(img.height()), w = static_cast<std::ptrdiff_t>(img.width());
  GrayImage tmp(img.height(), img.width()), out(img.height(), img.width());
  for (std::ptrdiff_t u = 0; u < h; ++u)
    for (std::ptrdiff_t v = 0; v < w; ++v) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img.clamped(u, v + i);
      tmp(u, v) = acc;
    }
  for (std::ptrdiff_t u = 0; u < h; ++u)
    for (std::ptrdiff_t v = 0; v < w; ++v) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(u + i, v);
      out(u, v) = acc;
    }
  return out;
}

struct ThermalRender {
  GrayImage s0, s1, s2;  // s1/s2 signed, in [-1, 1]
};

/// Emission model: skin emits through a decreasing, nonlinear remap of the
/// visible intensity (dark features such as eyes, brows and lips run warm),
/// hair and background are cold. Then optical blur and sensor noise. S1/S2
/// follow the surface orientation of the head outline.
inline ThermalRender render_thermal(const GrayImage& visible, const Face& f, Rng& noise) {
  const std::size_t h = visible.height(), w = visible.width();
  GrayImage t(h, w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      const double du = static_cast<double>(u), dv = static_cast<double>(v);
      const double face = cover(ellipse_distance(du, dv, f.cu, f.cv, f.ru, f.rv));
      const double hair = hair_cover(f, du, dv);
      const double skin = 0.25 + 0.7 * std::pow(1.0 - visible(u, v), 1.5);
      t(u, v) = 0.12 + face * (1.0 - hair) * (skin - 0.12) + hair * 0.08;
    }
  t = gaussian_blur(t, 1.5);
  ThermalRender out{GrayImage(h, w), GrayImage(h, w), GrayImage(h, w)};
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      const double s0 = std::clamp(t(u, v) + noise.uniform(-0.015, 0.015), 0.02, 1.0);
      const double du = (static_cast<double>(u) - f.cu) / f.ru, dv = (static_cast<double>(v) - f.cv) / f.rv;
      const double r = std::min(std::hypot(du, dv), 1.0);
      const double p = std::hypot(du, dv) <= 1.0 ? 0.25 * r * r : 0.02;
      const double phi = std::atan2(du, dv);
      out.s0(u, v) = s0;
      out.s1(u, v) = std::clamp(p * s0 * std::cos(2.0 * phi) + noise.uniform(-0.005, 0.005), -1.0, 1.0);
      out.s2(u, v) = std::clamp(p * s0 * std::sin(2.0 * phi) + noise.uniform(-0.005, 0.005), -1.0, 1.0);
    }
  return out;
}

inline GrayImage encode_signed(const GrayImage& s) {
  GrayImage out(s.height(), s.width());
  for (std::size_t i = 0; i < s.size(); ++i) out.pixels()[i] = 0.5 * (s.pixels()[i] + 1.0);
  return out;
}

}  // namespace demo

inline std::string demo_config_text(std::uint64_t seed) {
  std::ostringstream out;
  out << "# synthetic demo corpus\n"
      << "regions = regions.txt\n"
      << "mode = thermal\n"
      << "seed = " << seed << "\n"
      << "workers = 1\n"
      << "train.epochs = 60\n"
      << "train.learning_rate = 0.02\n"
      << "synth.iterations = 200\n"
      << "synth.lambda = 1e-6\n";
  return out.str();
}

/// Writes a paired visible/thermal corpus with two conditions per subject,
/// the first half of the subjects in the train split.
inline void make_demo_data(const fs::path& out, const DemoOptions& opt) {
  require(opt.subjects >= 2, ErrorCode::ConfigError, "demo corpus needs at least two subjects");
  for (const char* sub : {"visible", "thermal", "landmarks"}) fs::create_directories(out / sub);

  std::ostringstream manifest;
  manifest << kManifestHeader << "\n";
  const std::size_t digits = std::to_string(opt.subjects).size() < 2 ? 2 : std::to_string(opt.subjects).size();
  for (std::size_t s = 0; s < opt.subjects; ++s) {
    std::string num = std::to_string(s + 1);
    const std::string subject = "s" + std::string(digits - num.size(), '0') + num;
    Rng rng(derive_seed(opt.seed, "demo/" + subject));
    const demo::Face neutral = demo::random_face(rng);
    for (const std::string condition : {"baseline", "expression"}) {
      const demo::Face face = condition == "baseline" ? neutral : demo::with_expression(neutral);
      const std::string stem = subject + "_" + condition;
      Rng noise(derive_seed(opt.seed, "demo-noise/" + stem));
      GrayImage visible = demo::render_visible(face, kDemoHeight, kDemoWidth);
      const double gain = condition == "baseline" ? 1.0 : noise.uniform(0.95, 1.05);
      for (auto& p : visible.pixels()) p = std::clamp(gain * p + noise.uniform(-0.01, 0.01), 0.0, 1.0);
      const auto thermal = demo::render_thermal(visible, face, noise);

      save_image(visible, out / "visible" / (stem + ".png"), 16);
      save_image(thermal.s0, out / "thermal" / (stem + "_s0.png"), 16);
      save_image(demo::encode_signed(thermal.s1), out / "thermal" / (stem + "_s1.png"), 16);
      save_image(demo::encode_signed(thermal.s2), out / "thermal" / (stem + "_s2.png"), 16);
      write_file_atomic(out / "landmarks" / (stem + ".txt"), format_landmarks(demo::face_landmarks(face)));
      const bool train = s < opt.subjects / 2;
      manifest << subject << "," << condition << "," << (train ? "train" : "eval") << ",visible/" << stem
               << ".png,thermal/" << stem << "_s0.png,thermal/" << stem << "_s1.png,thermal/" << stem
               << "_s2.png,landmarks/" << stem << ".txt\n";
    }
  }
  write_file_atomic(out / "manifest.csv", manifest.str());
  write_file_atomic(out / "regions.txt", format_regions(kDemoHeight, kDemoWidth, default_face_regions()));
  write_file_atomic(out / "demo.conf", demo_config_text(opt.seed));
}

}  // namespace xsynth::pipeline

#endif  // XSYNTH_PIPELINE_DEMO_HPP
