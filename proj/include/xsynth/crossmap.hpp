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

#ifndef XSYNTH_CROSSMAP_HPP
#define XSYNTH_CROSSMAP_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/random.hpp"
#include "xsynth/tensor_io.hpp"

namespace xsynth {

inline constexpr std::size_t kHiddenUnits = 200;

/// Region-specific thermal-to-visible feature regressor: an MLP applied
/// independently at every feature location (a stack of 1x1 convolutions)
/// with two tanh hidden layers and a linear output.
template <typename T>
struct CrossMap {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
  };

  std::string region_id;
  std::array<Layer, 3> layers;

  std::size_t input_dim() const { return static_cast<std::size_t>(layers[0].weight.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layers[2].weight.rows()); }
  std::array<std::size_t, 4> layer_dims() const {
    return {input_dim(), kHiddenUnits, kHiddenUnits, output_dim()};
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  template <typename U>
  CrossMap<U> cast() const {
    CrossMap<U> out;
    out.region_id = region_id;
    for (std::size_t i = 0; i < 3; ++i) {
      out.layers[i].weight = layers[i].weight.template cast<U>();
      out.layers[i].bias = layers[i].bias.template cast<U>();
    }
    return out;
  }

  friend bool operator==(const CrossMap& a, const CrossMap& b) {
    if (a.region_id != b.region_id) return false;
    for (std::size_t i = 0; i < 3; ++i)
      if (a.layers[i].weight != b.layers[i].weight || a.layers[i].bias != b.layers[i].bias) return false;
    return true;
  }
};

/// Weights uniform in [-scale/sqrt(fan_in), +scale/sqrt(fan_in)], biases zero.
template <typename T = float>
CrossMap<T> init_crossmap(std::size_t d_in, std::size_t d_out, std::uint64_t seed, double scale = 1.0,
                          std::string region_id = "global") {
  require(d_in >= 1 && d_out >= 1, ErrorCode::InvalidParameter, "crossmap dimensions must be >= 1");
  require(scale >= 0.0 && std::isfinite(scale), ErrorCode::InvalidParameter, "init scale must be >= 0");
  Rng rng(seed);
  CrossMap<T> m;
  m.region_id = std::move(region_id);
  const std::array<std::size_t, 4> dims{d_in, kHiddenUnits, kHiddenUnits, d_out};
  for (std::size_t l = 0; l < 3; ++l) {
    const double bound = scale / std::sqrt(static_cast<double>(dims[l]));
    auto& layer = m.layers[l];
    layer.weight.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    layer.bias = CrossMap<T>::Vector::Zero(static_cast<Eigen::Index>(dims[l + 1]));
  }
  return m;
}

namespace detail {

/// Activations of one batch, columns are locations.
template <typename T>
struct MlpActivations {
  typename CrossMap<T>::Matrix input, hidden1, hidden2, output;
};

template <typename T>
MlpActivations<T> mlp_forward(const CrossMap<T>& m, typename CrossMap<T>::Matrix input) {
  MlpActivations<T> a;
  a.input = std::move(input);
  a.hidden1 = ((m.layers[0].weight * a.input).colwise() + m.layers[0].bias).array().tanh().matrix();
  a.hidden2 = ((m.layers[1].weight * a.hidden1).colwise() + m.layers[1].bias).array().tanh().matrix();
  a.output = (m.layers[2].weight * a.hidden2).colwise() + m.layers[2].bias;
  return a;
}

/// Gradients of the parameters plus the input, given dL/d(output).
template <typename T>
void mlp_backward(const CrossMap<T>& m, const MlpActivations<T>& a, const typename CrossMap<T>::Matrix& g_out,
                  CrossMap<T>& g_params, typename CrossMap<T>::Matrix* g_input) {
  using Matrix = typename CrossMap<T>::Matrix;
  g_params.layers[2].weight.noalias() = g_out * a.hidden2.transpose();
  g_params.layers[2].bias = g_out.rowwise().sum();
  // tanh'(u) = 1 - tanh(u)^2
  Matrix g2 = ((m.layers[2].weight.transpose() * g_out).array() * (T(1) - a.hidden2.array().square())).matrix();
  g_params.layers[1].weight.noalias() = g2 * a.hidden1.transpose();
  g_params.layers[1].bias = g2.rowwise().sum();
  Matrix g1 = ((m.layers[1].weight.transpose() * g2).array() * (T(1) - a.hidden1.array().square())).matrix();
  g_params.layers[0].weight.noalias() = g1 * a.input.transpose();
  g_params.layers[0].bias = g1.rowwise().sum();
  if (g_input) g_input->noalias() = m.layers[0].weight.transpose() * g1;
}

template <typename T>
typename CrossMap<T>::Matrix to_columns(const FeatureMap& f) {
  typename CrossMap<T>::Matrix x(static_cast<Eigen::Index>(f.depth()), static_cast<Eigen::Index>(f.locations()));
  for (std::size_t loc = 0; loc < f.locations(); ++loc) {
    auto src = f.location(loc);
    for (std::size_t d = 0; d < f.depth(); ++d) x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(loc)) = static_cast<T>(src[d]);
  }
  return x;
}

template <typename Derived>
FeatureMap from_columns(const Eigen::MatrixBase<Derived>& x, std::size_t rows, std::size_t cols) {
  FeatureMap f(rows, cols, static_cast<std::size_t>(x.rows()));
  for (std::size_t loc = 0; loc < f.locations(); ++loc) {
    auto dst = f.location(loc);
    for (std::size_t d = 0; d < f.depth(); ++d)
      dst[d] = static_cast<double>(x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(loc)));
  }
  return f;
}

}  // namespace detail

template <typename T>
FeatureMap crossmap_forward(const CrossMap<T>& m, const FeatureMap& f) {
  require(f.depth() == m.input_dim(), ErrorCode::DimensionMismatch,
          "crossmap '" + m.region_id + "' expects depth " + std::to_string(m.input_dim()) + ", got " +
              std::to_string(f.depth()));
  auto a = detail::mlp_forward(m, detail::to_columns<T>(f));
  return detail::from_columns(a.output, f.rows(), f.cols());
}

template <typename T>
struct CrossMapGradients {
  CrossMap<T> params;
  FeatureMap input;
};

template <typename T>
CrossMapGradients<T> crossmap_backward(const CrossMap<T>& m, const FeatureMap& f, const FeatureMap& upstream) {
  require(f.depth() == m.input_dim(), ErrorCode::DimensionMismatch, "crossmap input depth");
  require(upstream.rows() == f.rows() && upstream.cols() == f.cols() && upstream.depth() == m.output_dim(),
          ErrorCode::DimensionMismatch, "crossmap upstream shape " + shape_string(upstream));
  auto a = detail::mlp_forward(m, detail::to_columns<T>(f));
  CrossMapGradients<T> g;
  g.params.region_id = m.region_id;
  typename CrossMap<T>::Matrix g_input;
  detail::mlp_backward(m, a, detail::to_columns<T>(upstream), g.params, &g_input);
  g.input = detail::from_columns(g_input, f.rows(), f.cols());
  return g;
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double weight_init_scale = 1.0;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::InvalidParameter,
            "learning_rate must be > 0");
    require(epochs >= 1, ErrorCode::InvalidParameter, "epochs must be >= 1");
    require(batch_size >= 1, ErrorCode::InvalidParameter, "batch_size must be >= 1");
  }
};

/// One (thermal features, visible features) pair gathered from a single
/// region's crops.
struct TrainingPair {
  std::string region_id;
  FeatureMap thermal;
  FeatureMap visible;
};

template <typename T>
struct TrainResult {
  CrossMap<T> model;
  std::vector<double> loss_history;  // mean per-location squared error, one per epoch
};

/// Mini-batch SGD on the mean over locations of ||y - h(z)||^2. Every
/// location of every pair is a sample; the visit order is reshuffled each
/// epoch from the seeded generator.
template <typename T = float>
TrainResult<T> train_crossmap(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg) {
  cfg.validate();
  require(!pairs.empty(), ErrorCode::EmptyTrainingSet, "no training pairs");
  const auto& region = pairs.front().region_id;
  const std::size_t d_in = pairs.front().thermal.depth(), d_out = pairs.front().visible.depth();
  std::size_t n = 0;
  for (const auto& p : pairs) {
    require(p.region_id == region, ErrorCode::MixedRegionTags,
            "training pairs mix regions '" + region + "' and '" + p.region_id + "'");
    require(p.thermal.depth() == d_in && p.visible.depth() == d_out, ErrorCode::DimensionMismatch,
            "training pair depths differ");
    require(p.thermal.rows() == p.visible.rows() && p.thermal.cols() == p.visible.cols(),
            ErrorCode::DimensionMismatch, "thermal/visible feature grids differ");
    n += p.thermal.locations();
  }
  require(n > 0, ErrorCode::EmptyTrainingSet, "training pairs hold no feature locations");

  using Matrix = typename CrossMap<T>::Matrix;
  Matrix inputs(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(n));
  Matrix targets(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(n));
  {
    Eigen::Index col = 0;
    for (const auto& p : pairs) {
      const auto count = static_cast<Eigen::Index>(p.thermal.locations());
      inputs.middleCols(col, count) = detail::to_columns<T>(p.thermal);
      targets.middleCols(col, count) = detail::to_columns<T>(p.visible);
      col += count;
    }
  }

  TrainResult<T> result;
  result.model = init_crossmap<T>(d_in, d_out, cfg.seed, cfg.weight_init_scale, region);
  auto& model = result.model;
  CrossMap<T> grads;
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<Eigen::Index> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);

  Matrix batch_in, batch_target;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      batch_in.resize(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(count));
      batch_target.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        batch_in.col(static_cast<Eigen::Index>(k)) = inputs.col(order[start + k]);
        batch_target.col(static_cast<Eigen::Index>(k)) = targets.col(order[start + k]);
      }
      auto acts = detail::mlp_forward(model, batch_in);
      Matrix residual = acts.output - batch_target;
      const double batch_loss = static_cast<double>(residual.squaredNorm());
      if (!std::isfinite(batch_loss))
        fail(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch + 1) + " for region '" +
                                          region + "'");
      epoch_loss += batch_loss;
      // d/d(output) of the batch mean
      Matrix g_out = residual * static_cast<T>(2.0 / static_cast<double>(count));
      detail::mlp_backward<T>(model, acts, g_out, grads, nullptr);
      const T lr = static_cast<T>(cfg.learning_rate);
      for (std::size_t l = 0; l < 3; ++l) {
        model.layers[l].weight -= lr * grads.layers[l].weight;
        model.layers[l].bias -= lr * grads.layers[l].bias;
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss) || !model.all_finite())
      fail(ErrorCode::DivergedLoss, "training diverged in epoch " + std::to_string(epoch + 1));
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

// Model file: text header, a blank line, then one F32T tensor per entry of
// the "tensors" list (weights are out x in).
inline constexpr const char* kCrossMapMagic = "xsynth-crossmap";
inline constexpr int kCrossMapVersion = 1;

template <typename T>
std::vector<std::uint8_t> serialize_crossmap(const CrossMap<T>& m) {
  require(m.region_id.find_first_of("\r\n") == std::string::npos && !m.region_id.empty(),
          ErrorCode::InvalidParameter, "region id must be a single non-empty line");
  const auto dims = m.layer_dims();
  std::ostringstream header;
  header << kCrossMapMagic << " v" << kCrossMapVersion << "\n"
         << "region_id=" << m.region_id << "\n"
         << "dims=" << dims[0] << "," << dims[1] << "," << dims[2] << "," << dims[3] << "\n"
         << "tensors=W1,b1,W2,b2,W3,b3\n\n";
  const std::string text = header.str();
  std::vector<std::uint8_t> out(text.begin(), text.end());
  for (const auto& layer : m.layers) {
    std::vector<float> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(static_cast<float>(layer.weight(r, c)));
    const std::array<std::uint32_t, 2> wd{static_cast<std::uint32_t>(layer.weight.rows()),
                                          static_cast<std::uint32_t>(layer.weight.cols())};
    append_f32t(out, wd, w);
    std::vector<float> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    const std::array<std::uint32_t, 1> bd{static_cast<std::uint32_t>(layer.bias.size())};
    append_f32t(out, bd, b);
  }
  return out;
}

inline CrossMap<float> deserialize_crossmap(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    std::string line;
    while (pos < bytes.size() && bytes[pos] != '\n') line.push_back(static_cast<char>(bytes[pos++]));
    if (pos >= bytes.size()) fail(ErrorCode::CorruptFile, "truncated crossmap header");
    ++pos;
    return line;
  };
  const std::string expected = std::string(kCrossMapMagic) + " v" + std::to_string(kCrossMapVersion);
  std::string first;
  while (pos < bytes.size() && bytes[pos] != '\n' && first.size() < 64) first.push_back(static_cast<char>(bytes[pos++]));
  if (first != expected || pos >= bytes.size())
    fail(ErrorCode::FormatVersionMismatch, "expected '" + expected + "' header, found '" + first + "'");
  ++pos;

  CrossMap<float> m;
  std::array<std::size_t, 4> dims{};
  bool have_dims = false;
  for (std::string line = next_line(); !line.empty(); line = next_line()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::CorruptFile, "bad crossmap header line '" + line + "'");
    const auto key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "region_id") {
      m.region_id = value;
    } else if (key == "dims") {
      std::istringstream in(value);
      char comma;
      if (!(in >> dims[0] >> comma >> dims[1] >> comma >> dims[2] >> comma >> dims[3]))
        fail(ErrorCode::CorruptFile, "bad dims '" + value + "'");
      have_dims = true;
    } else if (key == "tensors") {
      if (value != "W1,b1,W2,b2,W3,b3") fail(ErrorCode::FormatVersionMismatch, "unknown tensor list '" + value + "'");
    } else {
      fail(ErrorCode::CorruptFile, "unknown crossmap header key '" + key + "'");
    }
  }
  if (!have_dims || m.region_id.empty()) fail(ErrorCode::CorruptFile, "crossmap header lacks dims or region_id");
  if (dims[1] != kHiddenUnits || dims[2] != kHiddenUnits)
    fail(ErrorCode::CorruptFile, "crossmap hidden layers must have " + std::to_string(kHiddenUnits) + " units");

  for (std::size_t l = 0; l < 3; ++l) {
    auto w = read_f32t(bytes, pos);
    auto b = read_f32t(bytes, pos);
    if (w.dims.size() != 2 || w.dims[0] != dims[l + 1] || w.dims[1] != dims[l] || b.dims.size() != 1 ||
        b.dims[0] != dims[l + 1])
      fail(ErrorCode::CorruptFile, "layer " + std::to_string(l + 1) + " tensor shape disagrees with dims");
    auto& layer = m.layers[l];
    layer.weight.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w.values[k++];
    layer.bias = Eigen::Map<const Eigen::VectorXf>(b.values.data(), static_cast<Eigen::Index>(b.values.size()));
  }
  if (pos != bytes.size()) fail(ErrorCode::CorruptFile, "trailing bytes after crossmap tensors");
  if (!m.all_finite()) fail(ErrorCode::CorruptFile, "crossmap parameters are not finite");
  return m;
}

template <typename T>
void save_crossmap(const CrossMap<T>& m, const fs::path& path) {
  write_file_atomic(path, serialize_crossmap(m));
}

inline CrossMap<float> load_crossmap(const fs::path& path) { return deserialize_crossmap(read_file_bytes(path)); }

}  // namespace xsynth

#endif  // XSYNTH_CROSSMAP_HPP
