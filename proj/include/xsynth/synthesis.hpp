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

#ifndef XSYNTH_SYNTHESIS_HPP
#define XSYNTH_SYNTHESIS_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "xsynth/crossmap.hpp"
#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/image.hpp"
#include "xsynth/random.hpp"
#include "xsynth/regions.hpp"
#include "xsynth/regularizers.hpp"

namespace xsynth {

enum class InitMode { Zeros, Mean, Noise };

struct SynthConfig {
  double lambda_alpha = 1e-4;
  double lambda_tv = 1e-4;
  double alpha = 6.0;
  double tv_beta = 2.0;
  double momentum = 0.9;
  double learning_rate = 0.004;
  std::size_t iterations = 400;
  InitMode init_mode = InitMode::Noise;
  std::uint64_t noise_seed = 0;
  double tv_eps = 1e-8;

  /// Sets both regularisation weights.
  void set_lambda(double lambda) { lambda_alpha = lambda_tv = lambda; }

  void validate() const {
    require(momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidParameter, "momentum must lie in [0,1)");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::InvalidParameter,
            "learning_rate must be > 0");
    require(alpha >= 1.0, ErrorCode::InvalidParameter, "alpha must be >= 1");
    require(tv_beta >= 1.0, ErrorCode::InvalidParameter, "tv_beta must be >= 1");
    require(tv_eps > 0.0, ErrorCode::InvalidParameter, "tv_eps must be > 0");
    require(lambda_alpha >= 0.0 && lambda_tv >= 0.0, ErrorCode::InvalidParameter, "lambda must be >= 0");
  }
};

/// Feature-space map from thermal to visible descriptors: either a trained
/// regressor or the identity (thermal features used as visible targets).
struct IdentityMapping {};
using RegionMapping = std::variant<IdentityMapping, CrossMap<float>, CrossMap<double>>;

inline FeatureMap apply_mapping(const RegionMapping& mapping, const FeatureMap& thermal) {
  return std::visit(
      [&](const auto& m) -> FeatureMap {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, IdentityMapping>)
          return thermal;
        else
          return crossmap_forward(m, thermal);
      },
      mapping);
}

/// Everything the multi-region objective needs: the regions and their
/// blending fields, plus one precomputed visible-feature target per region.
struct ObjectiveSpec {
  RegionSet regions;
  std::vector<FeatureMap> targets;
  DsiftConfig dsift;
  SynthConfig synth;

  void validate() const {
    require(targets.size() == regions.size(), ErrorCode::DimensionMismatch, "one target per region");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const auto& b = regions.region(i).bbox;
      require(targets[i].rows() == dsift.placements(b.h) && targets[i].cols() == dsift.placements(b.w) &&
                  targets[i].depth() == dsift.descriptor_size(),
              ErrorCode::DimensionMismatch,
              "target for region '" + regions.region(i).id + "' has shape " + shape_string(targets[i]));
    }
  }
};

/// Computes h_i(g(t_i)) for every region of the thermal stack.
inline ObjectiveSpec build_objective(const ThermalStack& thermal, RegionSet regions,
                                     const std::vector<RegionMapping>& mappings, const DsiftConfig& dsift,
                                     const SynthConfig& synth) {
  require(thermal.height() == regions.height() && thermal.width() == regions.width(), ErrorCode::DimensionMismatch,
          "thermal input does not match the region layout");
  require(mappings.size() == regions.size(), ErrorCode::DimensionMismatch, "one mapping per region");
  std::vector<FeatureMap> targets;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto crop = crop_region(thermal, regions.region(i).bbox);
    targets.push_back(apply_mapping(mappings[i], dsift_forward(crop, dsift)));
  }
  ObjectiveSpec spec{std::move(regions), std::move(targets), dsift, synth};
  spec.validate();
  return spec;
}

struct RegionEvaluation {
  double value = 0.0;  // loss + regularisers
  double loss = 0.0;
  double regularizer = 0.0;
  GrayImage grad;  // full image, zero outside the region box
};

/// Objective of one region: ||g(crop) - target||^2 + lambda R(crop), with the
/// gradient scattered back to full-image coordinates.
inline RegionEvaluation region_objective(const GrayImage& x, const BBox& box, const FeatureMap& target,
                                         const DsiftConfig& dsift, const SynthConfig& synth) {
  const GrayImage crop = crop_region(x, box);
  const DsiftTape tape(crop, dsift);
  const FeatureMap& features = tape.features();
  require_same_shape(features, target, "region target");
  FeatureMap upstream(features.rows(), features.cols(), features.depth());
  RegionEvaluation out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double r = features.values()[i] - target.values()[i];
    out.loss += r * r;
    upstream.values()[i] = 2.0 * r;
  }
  GrayImage crop_grad = tape.backward(upstream);
  if (synth.lambda_alpha > 0.0) {
    auto ra = reg_alpha(crop, synth.alpha);
    out.regularizer += synth.lambda_alpha * ra.value;
    for (std::size_t i = 0; i < crop.size(); ++i) crop_grad.pixels()[i] += synth.lambda_alpha * ra.grad.pixels()[i];
  }
  if (synth.lambda_tv > 0.0) {
    auto rt = reg_tv(crop, synth.tv_beta, synth.tv_eps);
    out.regularizer += synth.lambda_tv * rt.value;
    for (std::size_t i = 0; i < crop.size(); ++i) crop_grad.pixels()[i] += synth.lambda_tv * rt.grad.pixels()[i];
  }
  out.value = out.loss + out.regularizer;
  out.grad = GrayImage(x.height(), x.width(), 0.0);
  paste_add(out.grad, crop_grad, box);
  return out;
}

inline RegionEvaluation region_objective(const GrayImage& x, const Region& region, const FeatureMap& target,
                                         const DsiftConfig& dsift, const SynthConfig& synth) {
  return region_objective(x, region.bbox, target, dsift, synth);
}

struct ObjectiveEvaluation {
  double value = 0.0;
  std::vector<double> region_values;
  GrayImage grad;
};

/// Weighted multi-region objective. The gradient blends each region's
/// gradient per pixel with its weight field; the reported value weights each
/// region by the mean of its field over its own box, which coincides with the
/// scalar-weight objective whenever the fields are constant.
inline ObjectiveEvaluation total_objective(const GrayImage& x, const ObjectiveSpec& spec) {
  require(x.height() == spec.regions.height() && x.width() == spec.regions.width(), ErrorCode::DimensionMismatch,
          "image does not match the region layout");
  ObjectiveEvaluation out;
  out.grad = GrayImage(x.height(), x.width(), 0.0);
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    auto eval = region_objective(x, spec.regions.region(i), spec.targets[i], spec.dsift, spec.synth);
    out.region_values.push_back(eval.value);
    out.value += spec.regions.mean_weight(i) * eval.value;
    const auto& field = spec.regions.field(i);
    const auto& b = spec.regions.region(i).bbox;
    for (std::size_t u = b.y; u < b.y + b.h; ++u)
      for (std::size_t v = b.x; v < b.x + b.w; ++v) out.grad(u, v) += field(u, v) * eval.grad(u, v);
  }
  return out;
}

inline GrayImage initial_image(std::size_t height, std::size_t width, const SynthConfig& cfg) {
  switch (cfg.init_mode) {
    case InitMode::Zeros: return GrayImage(height, width, 0.0);
    case InitMode::Mean: return GrayImage(height, width, 0.5);
    case InitMode::Noise: {
      Rng rng(cfg.noise_seed);
      GrayImage img(height, width);
      for (auto& p : img.pixels()) p = rng.uniform(0.45, 0.55);
      return img;
    }
  }
  fail(ErrorCode::InvalidParameter, "unknown init mode");
}

struct SynthesisTrace {
  std::vector<std::string> region_ids;
  std::vector<double> objective;                   // J(x^j), j = 0 .. iterations-1
  std::vector<std::vector<double>> region_values;  // per iteration, per region
  GrayImage final_image;

  std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "iteration,J";
    for (const auto& id : region_ids) out << ",J_" << id;
    out << "\n";
    for (std::size_t j = 0; j < objective.size(); ++j) {
      out << j << "," << objective[j];
      for (double v : region_values[j]) out << "," << v;
      out << "\n";
    }
    return out.str();
  }
};

struct SynthesisResult {
  GrayImage image;
  SynthesisTrace trace;
};

/// Momentum gradient descent from `init`:
///   v <- mu v - eta grad J(x);  x <- x + v
inline SynthesisResult run_momentum_descent(const ObjectiveSpec& spec, GrayImage init) {
  spec.synth.validate();
  spec.validate();
  SynthesisResult result;
  for (const auto& r : spec.regions.regions()) result.trace.region_ids.push_back(r.id);
  GrayImage x = std::move(init);
  std::vector<double> velocity(x.size(), 0.0);
  const double mu = spec.synth.momentum, eta = spec.synth.learning_rate;
  for (std::size_t j = 0; j < spec.synth.iterations; ++j) {
    auto eval = total_objective(x, spec);
    if (!std::isfinite(eval.value))
      fail(ErrorCode::DivergedObjective, "objective is not finite at iteration " + std::to_string(j));
    result.trace.objective.push_back(eval.value);
    result.trace.region_values.push_back(std::move(eval.region_values));
    for (std::size_t i = 0; i < x.size(); ++i) {
      velocity[i] = mu * velocity[i] - eta * eval.grad.pixels()[i];
      x.pixels()[i] += velocity[i];
    }
  }
  for (double p : x.pixels())
    if (!std::isfinite(p)) fail(ErrorCode::DivergedObjective, "synthesised image is not finite");
  result.trace.final_image = x;
  result.image = std::move(x);
  return result;
}

/// Synthesises a visible-band image from a thermal stack: targets are
/// computed once from the thermal crops, then the multi-region objective is
/// minimised from the configured initialisation.
inline SynthesisResult synthesize(const ThermalStack& thermal, const RegionSet& regions,
                                  const std::vector<RegionMapping>& mappings, const DsiftConfig& dsift,
                                  const SynthConfig& synth) {
  auto spec = build_objective(thermal, regions, mappings, dsift, synth);
  return run_momentum_descent(spec, initial_image(thermal.height(), thermal.width(), synth));
}

}  // namespace xsynth

#endif  // XSYNTH_SYNTHESIS_HPP
