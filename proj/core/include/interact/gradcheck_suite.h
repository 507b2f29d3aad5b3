/* Copyright 2026 The Interact Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Finite-difference checks of every differentiable block of the pipeline on
// one synthetic scene. Matchings and winning modes are computed once at the
// unperturbed parameters and held fixed while probing.

#ifndef INTERACT_GRADCHECK_SUITE_H_
#define INTERACT_GRADCHECK_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "interact/gradcheck.h"
#include "interact/params.h"
#include "interact/scene.h"
#include "interact/synthgen.h"

namespace interact {

struct BlockResult {
  std::string block;
  GradCheckResult check;
  double seconds = 0.0;
};

// Initialised parameters with weight matrices doubled and biases, layer-norm
// offsets and gains jittered by up to 0.2. At the plain initialisation the
// few map instances near an agent encode almost alike, which leaves the
// cross-attention logits nearly flat, and zero biases put ReLUs on their
// kinks.
ModelParams ProbeParams(const Config& config, std::uint64_t seed);

// Runs every block; the last entry is "total_loss" over all parameters.
std::vector<BlockResult> RunGradCheckSuite(const Config& config, double eps = 1e-5,
                                           std::uint64_t seed = 0);

}  // namespace interact

#endif  // INTERACT_GRADCHECK_SUITE_H_
