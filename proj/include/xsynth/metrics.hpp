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

#ifndef XSYNTH_METRICS_HPP
#define XSYNTH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/image.hpp"
#include "xsynth/regions.hpp"
#include "xsynth/tensor_io.hpp"

namespace xsynth {

using Embedding = std::vector<double>;

/// Vectors from an external model, keyed by image id.
struct EmbeddingTable {
  std::vector<std::string> ids;
  std::vector<Embedding> vectors;

  const Embedding* find(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return &vectors[i];
    return nullptr;
  }
};

struct EmbeddingSource {
  enum class Mode { DsiftPooled, ExternalFile };
  Mode mode = Mode::DsiftPooled;
  DsiftConfig dsift;
  std::optional<BBox> crop;  // matching region; whole image when unset
  EmbeddingTable table;      // ExternalFile mode
};

/// Embedding file pair: <stem>.f32t holds an N x D tensor, <stem>.ids one
/// image id per line in row order.
inline EmbeddingTable load_embeddings(const fs::path& tensor_path, const fs::path& ids_path) {
  const auto t = load_f32t(tensor_path);
  require(t.dims.size() == 2, ErrorCode::DataError, "embedding tensor must be N x D");
  std::istringstream in(read_file_text(ids_path));
  EmbeddingTable table;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) table.ids.push_back(line);
  require(table.ids.size() == t.dims[0], ErrorCode::DataError,
          "embedding id count " + std::to_string(table.ids.size()) + " does not match " + std::to_string(t.dims[0]) +
              " rows");
  for (std::size_t r = 0; r < t.dims[0]; ++r)
    table.vectors.emplace_back(t.values.begin() + static_cast<std::ptrdiff_t>(r * t.dims[1]),
                               t.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * t.dims[1]));
  return table;
}

inline void save_embeddings(const EmbeddingTable& table, const fs::path& tensor_path, const fs::path& ids_path) {
  require(!table.vectors.empty() && table.ids.size() == table.vectors.size(), ErrorCode::DimensionMismatch,
          "embedding table is empty or inconsistent");
  F32Tensor t;
  t.dims = {static_cast<std::uint32_t>(table.vectors.size()), static_cast<std::uint32_t>(table.vectors[0].size())};
  std::string ids;
  for (std::size_t i = 0; i < table.vectors.size(); ++i) {
    require(table.vectors[i].size() == table.vectors[0].size(), ErrorCode::DimensionMismatch, "ragged embeddings");
    t.values.insert(t.values.end(), table.vectors[i].begin(), table.vectors[i].end());
    ids += table.ids[i] + "\n";
  }
  save_f32t(tensor_path, t);
  write_file_atomic(ids_path, ids);
}

/// Pooled DSIFT embedding: the flattened feature map, L2-normalised. In
/// external mode the vector is looked up by image id.
inline Embedding embed(const GrayImage& img, const EmbeddingSource& src, const std::string& image_id = {}) {
  if (src.mode == EmbeddingSource::Mode::ExternalFile) {
    const auto* v = src.table.find(image_id);
    if (!v) fail(ErrorCode::MissingEmbedding, "no embedding for image '" + image_id + "'");
    return *v;
  }
  const auto features = dsift_forward(src.crop ? crop_region(img, *src.crop) : img, src.dsift);
  Embedding e(features.values().begin(), features.values().end());
  double norm = 0.0;
  for (double x : e) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) fail(ErrorCode::ZeroFeatureVector, "image has no gradient structure to embed");
  for (double& x : e) x /= norm;
  return e;
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch,
          "embedding sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct OperatingPoint {
  double threshold;  // accept when score >= threshold
  double tpr;
  double fpr;
};

struct RocReport {
  std::vector<OperatingPoint> points;  // thresholds descending, starting at +inf
  double auc = 0.0;
  double eer = 0.0;
};

/// ROC over every distinct score threshold. AUC is the rank statistic
/// P(genuine > impostor) + P(equal)/2; EER interpolates linearly between the
/// two operating points where FPR - FNR changes sign.
inline RocReport roc_auc_eer(const ScoreSet& scores) {
  require(!scores.genuine.empty() && !scores.impostor.empty(), ErrorCode::EmptyScores,
          "need at least one genuine and one impostor score");
  for (double s : scores.genuine) require(std::isfinite(s), ErrorCode::DataError, "non-finite genuine score");
  for (double s : scores.impostor) require(std::isfinite(s), ErrorCode::DataError, "non-finite impostor score");

  std::vector<double> gen = scores.genuine, imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  const double ng = static_cast<double>(gen.size()), ni = static_cast<double>(imp.size());

  RocReport report;
  double wins = 0.0;
  for (double g : gen) {
    const auto lo = std::lower_bound(imp.begin(), imp.end(), g);
    const auto hi = std::upper_bound(lo, imp.end(), g);
    wins += static_cast<double>(lo - imp.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  report.auc = wins / (ng * ni);

  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  thresholds.insert(thresholds.end(), gen.begin(), gen.end());
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  report.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double t : thresholds) {
    const auto accepted_g = static_cast<double>(gen.end() - std::lower_bound(gen.begin(), gen.end(), t));
    const auto accepted_i = static_cast<double>(imp.end() - std::lower_bound(imp.begin(), imp.end(), t));
    report.points.push_back({t, accepted_g / ng, accepted_i / ni});
  }

  // FPR - FNR runs from -1 (reject all) to +1 (accept all)
  auto gap = [](const OperatingPoint& p) { return p.fpr - (1.0 - p.tpr); };
  for (std::size_t k = 1; k < report.points.size(); ++k) {
    const double d1 = gap(report.points[k]);
    if (d1 < 0.0) continue;
    const auto& a = report.points[k - 1];
    const auto& b = report.points[k];
    const double d0 = gap(a);
    if (d1 == 0.0) {
      report.eer = b.fpr;
    } else {
      const double t = -d0 / (d1 - d0);
      report.eer = a.fpr + t * (b.fpr - a.fpr);
    }
    break;
  }
  return report;
}

struct SsimParams {
  enum class Window { Uniform, Gaussian };
  int window = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  Window weighting = Window::Uniform;
  double gaussian_sigma = 1.5;
};

/// Mean SSIM over windows centred on every pixel, replicate boundary.
inline double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {}) {
  require_same_shape(a, b, "ssim");
  require(params.window >= 3 && params.window % 2 == 1, ErrorCode::InvalidParameter, "ssim window must be odd and >= 3");
  require(params.dynamic_range > 0.0 && params.k1 >= 0.0 && params.k2 >= 0.0, ErrorCode::InvalidParameter,
          "ssim constants");
  const int r = params.window / 2;
  std::vector<double> kernel(static_cast<std::size_t>(params.window), 1.0);
  if (params.weighting == SsimParams::Window::Gaussian) {
    require(params.gaussian_sigma > 0.0, ErrorCode::InvalidParameter, "gaussian sigma must be > 0");
    for (int i = -r; i <= r; ++i)
      kernel[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (params.gaussian_sigma * params.gaussian_sigma));
  }
  double ksum = 0.0;
  for (double k : kernel) ksum += k;
  for (double& k : kernel) k /= ksum;

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  const auto h = static_cast<std::ptrdiff_t>(a.height()), w = static_cast<std::ptrdiff_t>(a.width());

  // separable weighted moments: rows first, then columns
  std::vector<double> ma(a.size()), mb(a.size()), maa(a.size()), mbb(a.size()), mab(a.size());
  for (std::ptrdiff_t u = 0; u < h; ++u)
    for (std::ptrdiff_t v = 0; v < w; ++v) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = -r; i <= r; ++i) {
        const double k = kernel[static_cast<std::size_t>(i + r)];
        const double x = a.clamped(u, v + i), y = b.clamped(u, v + i);
        sa += k * x;
        sb += k * y;
        saa += k * x * x;
        sbb += k * y * y;
        sab += k * (x * y);
      }
      const auto idx = static_cast<std::size_t>(u * w + v);
      ma[idx] = sa, mb[idx] = sb, maa[idx] = saa, mbb[idx] = sbb, mab[idx] = sab;
    }
  double total = 0.0;
  for (std::ptrdiff_t u = 0; u < h; ++u)
    for (std::ptrdiff_t v = 0; v < w; ++v) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = -r; i <= r; ++i) {
        const double k = kernel[static_cast<std::size_t>(i + r)];
        const auto idx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(u + i, 0, h - 1) * w + v);
        sa += k * ma[idx];
        sb += k * mb[idx];
        saa += k * maa[idx];
        sbb += k * mbb[idx];
        sab += k * mab[idx];
      }
      const double var_a = saa - sa * sa, var_b = sbb - sb * sb, cov = sab - sa * sb;
      total += ((2.0 * sa * sb + c1) * (2.0 * cov + c2)) / ((sa * sa + sb * sb + c1) * (var_a + var_b + c2));
    }
  return total / static_cast<double>(a.size());
}

inline double landmark_error(const LandmarkSet& detected, const LandmarkSet& truth) {
  require(detected.count() == truth.count(), ErrorCode::CountMismatch,
          std::to_string(detected.count()) + " detected vs " + std::to_string(truth.count()) + " reference landmarks");
  require(truth.count() > 0, ErrorCode::CountMismatch, "empty landmark sets");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.count(); ++i)
    sum += std::hypot(detected.points()[i].u - truth.points()[i].u, detected.points()[i].v - truth.points()[i].v);
  return sum / static_cast<double>(truth.count());
}

/// "u v" per line; '#' starts a comment.
inline LandmarkSet parse_landmarks(const std::string& text) {
  std::vector<Point2> pts;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Point2 p;
    std::string extra;
    if (!(ls >> p.u >> p.v) || (ls >> extra))
      fail(ErrorCode::DataError, "malformed landmark line " + std::to_string(lineno));
    pts.push_back(p);
  }
  if (pts.empty()) fail(ErrorCode::DataError, "landmark file is empty");
  return LandmarkSet(std::move(pts));
}

inline LandmarkSet load_landmarks(const fs::path& path) { return parse_landmarks(read_file_text(path)); }

inline std::string format_landmarks(const LandmarkSet& set) {
  std::ostringstream out;
  out.precision(10);
  for (const auto& p : set.points()) out << p.u << " " << p.v << "\n";
  return out.str();
}

struct LabeledEmbedding {
  std::string image_id;
  std::string identity;
  Embedding vector;
};

struct ScoreEntry {
  std::string probe_id;
  std::string gallery_id;
  double score;
  bool genuine;
};

struct ScoreMatrix {
  std::vector<ScoreEntry> entries;  // probe-major
  ScoreSet scores;

  std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "probe_id,gallery_id,score,genuine\n";
    for (const auto& e : entries) out << e.probe_id << "," << e.gallery_id << "," << e.score << "," << (e.genuine ? 1 : 0) << "\n";
    return out.str();
  }
};

/// Scores every probe against every gallery entry; same identity is genuine.
inline ScoreMatrix build_score_matrix(const std::vector<LabeledEmbedding>& gallery,
                                      const std::vector<LabeledEmbedding>& probes) {
  require(!gallery.empty() && !probes.empty(), ErrorCode::EmptyScores, "gallery and probes must be non-empty");
  ScoreMatrix m;
  for (const auto& p : probes)
    for (const auto& g : gallery) {
      const bool genuine = p.identity == g.identity;
      const double s = cosine_similarity(p.vector, g.vector);
      m.entries.push_back({p.image_id, g.image_id, s, genuine});
      (genuine ? m.scores.genuine : m.scores.impostor).push_back(s);
    }
  require(!m.scores.genuine.empty(), ErrorCode::NoGenuinePairs, "no probe shares an identity with the gallery");
  return m;
}

/// Parses a score CSV written by ScoreMatrix::to_csv.
inline ScoreSet parse_score_csv(const std::string& text) {
  ScoreSet set;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  require(line.rfind("probe_id,gallery_id,score,genuine", 0) == 0, ErrorCode::DataError, "bad score CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    require(cells.size() == 4, ErrorCode::DataError, "bad score CSV row '" + line + "'");
    const double s = std::stod(cells[2]);
    (cells[3] == "1" ? set.genuine : set.impostor).push_back(s);
  }
  return set;
}

}  // namespace xsynth

#endif  // XSYNTH_METRICS_HPP
