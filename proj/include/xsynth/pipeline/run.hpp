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

#ifndef XSYNTH_PIPELINE_RUN_HPP
#define XSYNTH_PIPELINE_RUN_HPP

#include <exception>
#include <new>
#include <string>

#include "xsynth/error.hpp"
#include "xsynth/pipeline/commands.hpp"
#include "xsynth/pipeline/demo.hpp"

namespace xsynth::pipeline {

/// Runs a named subcommand and maps failures onto the exit-code contract:
/// 0 ok, 2 configuration, 3 data, 4 numerical failure.
inline int run_command(const std::string& name, const CommandOptions& opt, const DemoOptions& demo_opt = {}) {
  try {
    if (name == "train") cmd_train(opt);
    else if (name == "synthesize") cmd_synthesize(opt);
    else if (name == "evaluate") cmd_evaluate(opt);
    else if (name == "make-demo-data") make_demo_data(opt.out, demo_opt);
    else fail(ErrorCode::ConfigError, "unknown command '" + name + "'");
    return kExitOk;
  } catch (const Error& e) {
    detail::log(opt, LogLevel::Error, e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    detail::log(opt, LogLevel::Error, std::string("IoError: ") + e.what());
    return kExitData;
  } catch (const std::bad_alloc&) {
    detail::log(opt, LogLevel::Error, "out of memory");
    return kExitData;
  }
}

}  // namespace xsynth::pipeline

#endif  // XSYNTH_PIPELINE_RUN_HPP
