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

#ifndef XSYNTH_XSYNTH_HPP
#define XSYNTH_XSYNTH_HPP

#include "xsynth/crossmap.hpp"
#include "xsynth/dsift.hpp"
#include "xsynth/error.hpp"
#include "xsynth/fileio.hpp"
#include "xsynth/image.hpp"
#include "xsynth/image_io.hpp"
#include "xsynth/metrics.hpp"
#include "xsynth/nlm.hpp"
#include "xsynth/polarimetry.hpp"
#include "xsynth/random.hpp"
#include "xsynth/regions.hpp"
#include "xsynth/regularizers.hpp"
#include "xsynth/synthesis.hpp"
#include "xsynth/tensor_io.hpp"
#include "xsynth/pipeline/commands.hpp"
#include "xsynth/pipeline/config.hpp"
#include "xsynth/pipeline/demo.hpp"
#include "xsynth/pipeline/manifest.hpp"
#include "xsynth/pipeline/run.hpp"

#endif  // XSYNTH_XSYNTH_HPP
