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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "xsynth/pipeline/run.hpp"

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("XSYNTH_LOG");
  const std::string v = env ? env : "info";
  if (v == "error") return spdlog::level::err;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace xsynth::pipeline;
  auto logger = spdlog::stderr_color_mt("xsynth");
  logger->set_pattern("[%H:%M:%S] [%l] %v");
  logger->set_level(level_from_env());

  CLI::App app{"Visible face synthesis from thermal imagery"};
  app.require_subcommand(1, 1);

  CommandOptions opt;
  DemoOptions demo_opt;
  std::string manifest, config, out, models, synth;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  auto common = [&](CLI::App* sub, bool needs_inputs) {
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    if (needs_inputs) {
      sub->add_option("--manifest", manifest, "Dataset manifest CSV")->required();
      sub->add_option("--config", config, "Configuration file")->required();
      sub->add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
    }
  };
  auto* train = app.add_subcommand("train", "Train one cross-spectrum map per region");
  common(train, true);
  auto* synthesize = app.add_subcommand("synthesize", "Synthesise visible images for the eval split");
  common(synthesize, true);
  synthesize->add_option("--models", models, "Model directory (default <out>/models)");
  auto* evaluate = app.add_subcommand("evaluate", "Score synthesised images against the visible gallery");
  common(evaluate, true);
  evaluate->add_option("--synth", synth, "Synthesised image directory (default <out>/synth)");
  auto* demo = app.add_subcommand("make-demo-data", "Write a synthetic paired-band corpus");
  common(demo, false);
  demo->add_option("--subjects", demo_opt.subjects, "Number of subjects")->check(CLI::Range(2, 999));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  opt.manifest = manifest;
  opt.config = config;
  opt.out = out;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->get_option_no_throw("--workers") && sub->count("--workers")) opt.workers = workers;
  if (!models.empty()) opt.models = models;
  if (!synth.empty()) opt.synth = synth;
  demo_opt.seed = seed;
  opt.log = [&](LogLevel level, const std::string& msg) {
    switch (level) {
      case LogLevel::Error: logger->error(msg); break;
      case LogLevel::Info: logger->info(msg); break;
      case LogLevel::Debug: logger->debug(msg); break;
    }
  };
  return run_command(name, opt, demo_opt);
}
