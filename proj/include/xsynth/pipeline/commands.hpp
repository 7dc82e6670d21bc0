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

#ifndef XSYNTH_PIPELINE_COMMANDS_HPP
#define XSYNTH_PIPELINE_COMMANDS_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "xsynth/crossmap.hpp"
#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/image_io.hpp"
#include "xsynth/metrics.hpp"
#include "xsynth/nlm.hpp"
#include "xsynth/pipeline/config.hpp"
#include "xsynth/pipeline/manifest.hpp"
#include "xsynth/polarimetry.hpp"
#include "xsynth/regions.hpp"
#include "xsynth/synthesis.hpp"

namespace xsynth::pipeline {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };
using LogFn = std::function<void(LogLevel, const std::string&)>;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidParameter:
    case ErrorCode::OverlappingRegions: return kExitConfig;
    case ErrorCode::DivergedLoss:
    case ErrorCode::DivergedObjective: return kExitNumeric;
    default: return kExitData;
  }
}

struct CommandOptions {
  fs::path manifest;
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<fs::path> models;  // synthesize: defaults to <out>/models
  std::optional<fs::path> synth;   // evaluate: defaults to <out>/synth
  LogFn log;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finaliser
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline void log(const CommandOptions& opt, LogLevel level, const std::string& msg) {
  if (opt.log) opt.log(level, msg);
}

}  // namespace detail

/// Seed for one named unit of work, derived from the single config seed.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  return detail::mix64(seed ^ detail::fnv1a(label));
}

/// Runs fn(0..n-1) on at most `workers` threads. The first failure by index
/// is rethrown, so error reporting does not depend on scheduling.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Loads the thermal input of an entry in the configured mode.
inline ThermalStack load_thermal(const ManifestEntry& e, const PipelineConfig& cfg) {
  GrayImage s0 = load_image(e.s0);
  if (cfg.mode == Mode::Thermal) return make_thermal_stack(s0);
  if (!e.polarimetric()) fail(ErrorCode::DataError, "entry " + e.stem() + " lacks S1/S2");
  GrayImage s1 = load_image(*e.s1), s2 = load_image(*e.s2);
  if (cfg.signed_stokes)
    for (auto* img : {&s1, &s2})
      for (auto& p : img->pixels()) p = 2.0 * p - 1.0;
  return make_polarimetric_stack(s0, s1, s2, cfg.dolp_eps);
}

/// Region layout for an image size; problems with the regions file are
/// configuration errors.
inline RegionSet resolve_regions(const PipelineConfig& cfg, std::size_t height, std::size_t width) {
  try {
    if (!cfg.regions_file) return build_weight_fields(height, width, default_face_regions());
    return make_region_set(load_regions(*cfg.regions_file), height, width);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, std::string("regions: ") + e.what());
  }
}

inline std::size_t thermal_descriptor_size(const PipelineConfig& cfg) {
  return cfg.dsift.descriptor_size() * (cfg.mode == Mode::Polarimetric ? 2 : 1);
}

inline fs::path model_path(const fs::path& dir, const std::string& region_id) { return dir / (region_id + ".xmap"); }

struct LoadedRun {
  PipelineConfig config;
  Manifest manifest;
  std::size_t workers = 1;
};

inline LoadedRun load_run(const CommandOptions& opt) {
  LoadedRun run;
  run.config = load_config(opt.config);
  if (opt.seed) run.config.seed = *opt.seed;
  run.workers = opt.workers ? *opt.workers : run.config.workers;
  if (run.workers == 0) fail(ErrorCode::ConfigError, "--workers must be >= 1");
  run.manifest = load_manifest(opt.manifest);
  check_mode(run.manifest, run.config.mode);
  return run;
}

/// Trains one cross-map per region on the train split. Each thermal image is
/// used raw and, when augmentation is on, NLM-filtered; crops are taken after
/// filtering.
inline void cmd_train(const CommandOptions& opt) {
  const auto run = load_run(opt);
  const auto& cfg = run.config;
  const auto entries = run.manifest.split(Split::Train);
  if (entries.empty()) fail(ErrorCode::DataError, "train split is empty");

  const GrayImage first = load_image(entries.front()->visible);
  const RegionSet regions = resolve_regions(cfg, first.height(), first.width());
  const std::size_t nreg = regions.size();

  // pairs[entry][copy][region]
  std::vector<std::vector<std::vector<TrainingPair>>> pairs(entries.size());
  parallel_for(entries.size(), run.workers, [&](std::size_t k) {
    const auto& e = *entries[k];
    const GrayImage visible = load_image(e.visible);
    const ThermalStack thermal = load_thermal(e, cfg);
    if (visible.height() != regions.height() || visible.width() != regions.width() ||
        thermal.height() != visible.height() || thermal.width() != visible.width())
      fail(ErrorCode::DataError, "entry " + e.stem() + " does not match the " + std::to_string(regions.height()) +
                                     "x" + std::to_string(regions.width()) + " layout");
    std::vector<ThermalStack> copies{thermal};
    if (cfg.augment_nlm) copies.push_back(nlm_filter(thermal, cfg.nlm, cfg.nlm_s0_only));
    for (const auto& t : copies) {
      std::vector<TrainingPair> per_region;
      for (std::size_t i = 0; i < nreg; ++i) {
        const auto& r = regions.region(i);
        per_region.push_back({r.id, dsift_forward(crop_region(t, r.bbox), cfg.dsift),
                              dsift_forward(crop_region(visible, r.bbox), cfg.dsift)});
      }
      pairs[k].push_back(std::move(per_region));
    }
    detail::log(opt, LogLevel::Debug, "features ready for " + e.stem());
  });

  const fs::path models = opt.out / "models";
  fs::create_directories(models);
  parallel_for(nreg, run.workers, [&](std::size_t i) {
    const auto& id = regions.region(i).id;
    std::vector<TrainingPair> data;
    for (auto& entry : pairs)
      for (auto& copy : entry) data.push_back(copy[i]);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train/" + id);
    auto result = train_crossmap<float>(data, tc);
    result.model.region_id = id;
    save_crossmap(result.model, model_path(models, id));
    std::ostringstream csv;
    csv.precision(9);
    csv << "epoch,loss\n";
    for (std::size_t ep = 0; ep < result.loss_history.size(); ++ep) csv << ep << "," << result.loss_history[ep] << "\n";
    write_file_atomic(models / (id + "_loss.csv"), csv.str());
    detail::log(opt, LogLevel::Info,
                "trained region '" + id + "' on " + std::to_string(data.size()) + " image crops, final loss " +
                    std::to_string(result.loss_history.back()));
  });
}

/// Synthesises one visible-band image per eval entry.
inline void cmd_synthesize(const CommandOptions& opt) {
  const auto run = load_run(opt);
  const auto& cfg = run.config;
  const auto entries = run.manifest.split(Split::Eval);
  if (entries.empty()) fail(ErrorCode::DataError, "eval split is empty");
  const fs::path models = opt.models ? *opt.models : opt.out / "models";

  const ThermalStack probe = load_thermal(*entries.front(), cfg);
  const RegionSet regions = resolve_regions(cfg, probe.height(), probe.width());
  std::vector<RegionMapping> mappings;
  for (const auto& r : regions.regions()) {
    const auto path = model_path(models, r.id);
    if (!fs::exists(path)) fail(ErrorCode::DataError, "missing model for region '" + r.id + "': " + path.string());
    auto m = load_crossmap(path);
    if (m.region_id != r.id)
      fail(ErrorCode::DataError, "model " + path.string() + " was trained for region '" + m.region_id + "'");
    if (m.input_dim() != thermal_descriptor_size(cfg) || m.output_dim() != cfg.dsift.descriptor_size())
      fail(ErrorCode::DataError, "model " + path.string() + " dimensions do not match the configuration");
    mappings.emplace_back(std::move(m));
  }

  const fs::path synth_dir = opt.out / "synth";
  fs::create_directories(synth_dir);
  parallel_for(entries.size(), run.workers, [&](std::size_t k) {
    const auto& e = *entries[k];
    ThermalStack thermal = load_thermal(e, cfg);
    if (thermal.height() != regions.height() || thermal.width() != regions.width())
      fail(ErrorCode::DataError, "entry " + e.stem() + " does not match the region layout");
    if (cfg.nlm_at_inference) thermal = nlm_filter(thermal, cfg.nlm, cfg.nlm_s0_only);
    SynthConfig sc = cfg.synth;
    sc.noise_seed = derive_seed(cfg.seed, "synth/" + e.stem());
    const auto result = synthesize(thermal, regions, mappings, cfg.dsift, sc);
    save_image(result.image, synth_dir / (e.stem() + "_synth.png"), 16);
    write_file_atomic(synth_dir / (e.stem() + "_trace.csv"), result.trace.to_csv());
    const auto& J = result.trace.objective;
    detail::log(opt, LogLevel::Info,
                "synthesised " + e.stem() +
                    (J.empty() ? std::string() : ", J " + std::to_string(J.front()) + " -> " + std::to_string(J.back())));
  });
}

struct EvaluationSummary {
  RocReport synth;
  RocReport baseline;
  std::size_t probes = 0;
  std::size_t gallery = 0;
  double mean_ssim = 0.0;
  double baseline_mean_ssim = 0.0;
  std::optional<double> landmark_error;
  std::size_t landmark_pairs = 0;
};

inline std::string format_roc_csv(const RocReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,tpr,fpr\n";
  for (const auto& p : r.points) out << p.threshold << "," << p.tpr << "," << p.fpr << "\n";
  return out.str();
}

/// Verification and quality report for the synthesised eval split. Gallery:
/// visible images. Probes: synthesised images, and raw S0 for the baseline.
inline EvaluationSummary cmd_evaluate(const CommandOptions& opt) {
  const auto run = load_run(opt);
  const auto& cfg = run.config;
  const auto entries = run.manifest.split(Split::Eval);
  if (entries.empty()) fail(ErrorCode::DataError, "eval split is empty");
  const fs::path synth_dir = opt.synth ? *opt.synth : opt.out / "synth";
  for (const auto* e : entries) {
    const auto p = synth_dir / (e->stem() + "_synth.png");
    if (!fs::exists(p)) fail(ErrorCode::DataError, "missing synthesised image " + p.string());
  }

  EmbeddingSource src;
  src.dsift = cfg.dsift;
  src.crop = cfg.eval_crop;
  if (cfg.embedding_file) {
    src.mode = EmbeddingSource::Mode::ExternalFile;
    auto stem = cfg.embedding_file->string();
    src.table = load_embeddings(stem + ".f32t", stem + ".ids");
  }
  SsimParams sp;
  sp.window = cfg.ssim_window;

  const std::size_t n = entries.size();
  std::vector<LabeledEmbedding> gallery(n), probes(n), baseline(n);
  std::vector<double> ssim_synth(n), ssim_base(n);
  std::vector<std::optional<double>> lm(n);
  parallel_for(n, run.workers, [&](std::size_t k) {
    const auto& e = *entries[k];
    const auto synth_path = synth_dir / (e.stem() + "_synth.png");
    const GrayImage visible = load_image(e.visible), synth = load_image(synth_path), s0 = load_image(e.s0);
    require_same_shape(visible, synth, "synthesised image " + e.stem());
    require_same_shape(visible, s0, "thermal image " + e.stem());
    auto label = [&](const fs::path& p, const GrayImage& img) {
      const auto id = p.filename().string();
      return LabeledEmbedding{id, e.subject_id, embed(img, src, id)};
    };
    gallery[k] = label(e.visible, visible);
    probes[k] = label(synth_path, synth);
    baseline[k] = label(e.s0, s0);
    ssim_synth[k] = ssim(synth, visible, sp);
    ssim_base[k] = ssim(s0, visible, sp);
    const auto detected = synth_dir / (e.stem() + "_synth_landmarks.txt");
    if (e.landmarks && fs::exists(detected))
      lm[k] = landmark_error(load_landmarks(detected), load_landmarks(*e.landmarks));
  });

  const auto scores = build_score_matrix(gallery, probes);
  const auto base_scores = build_score_matrix(gallery, baseline);
  EvaluationSummary s;
  s.synth = roc_auc_eer(scores.scores);
  s.baseline = roc_auc_eer(base_scores.scores);
  s.probes = n;
  s.gallery = n;
  double lm_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    s.mean_ssim += ssim_synth[k] / static_cast<double>(n);
    s.baseline_mean_ssim += ssim_base[k] / static_cast<double>(n);
    if (lm[k]) {
      lm_sum += *lm[k];
      ++s.landmark_pairs;
    }
  }
  if (s.landmark_pairs > 0) s.landmark_error = lm_sum / static_cast<double>(s.landmark_pairs);

  std::ostringstream ssim_csv;
  ssim_csv.precision(17);
  ssim_csv << "image_id,ssim_synth,ssim_thermal\n";
  for (std::size_t k = 0; k < n; ++k) ssim_csv << entries[k]->stem() << "," << ssim_synth[k] << "," << ssim_base[k] << "\n";

  std::ostringstream report;
  report.precision(17);
  report << "# xsynth evaluation report\n";
  report << "probes = " << n << "\n";
  report << "gallery = " << n << "\n";
  report << "genuine_pairs = " << scores.scores.genuine.size() << "\n";
  report << "impostor_pairs = " << scores.scores.impostor.size() << "\n";
  report << "auc = " << s.synth.auc << "\n";
  report << "eer = " << s.synth.eer << "\n";
  report << "baseline_auc = " << s.baseline.auc << "\n";
  report << "baseline_eer = " << s.baseline.eer << "\n";
  report << "mean_ssim = " << s.mean_ssim << "\n";
  report << "baseline_mean_ssim = " << s.baseline_mean_ssim << "\n";
  if (s.landmark_error)
    report << "landmark_error = " << *s.landmark_error << "\nlandmark_pairs = " << s.landmark_pairs << "\n";
  else
    report << "landmark_error = n/a\n";

  const fs::path dir = opt.out / "eval";
  fs::create_directories(dir);
  write_file_atomic(dir / "scores.csv", scores.to_csv());
  write_file_atomic(dir / "baseline_scores.csv", base_scores.to_csv());
  write_file_atomic(dir / "roc.csv", format_roc_csv(s.synth));
  write_file_atomic(dir / "baseline_roc.csv", format_roc_csv(s.baseline));
  write_file_atomic(dir / "ssim.csv", ssim_csv.str());
  write_file_atomic(dir / "report.txt", report.str());
  detail::log(opt, LogLevel::Info,
              "AUC " + std::to_string(s.synth.auc) + " (baseline " + std::to_string(s.baseline.auc) + "), EER " +
                  std::to_string(s.synth.eer) + " (baseline " + std::to_string(s.baseline.eer) + ")");
  return s;
}

/// Reads "key = value" lines of a report back into a map.
inline std::map<std::string, std::string> parse_report(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace xsynth::pipeline

#endif  // XSYNTH_PIPELINE_COMMANDS_HPP
