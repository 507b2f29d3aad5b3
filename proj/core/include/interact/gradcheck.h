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

#ifndef INTERACT_GRADCHECK_H_
#define INTERACT_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "interact/tensor.h"

namespace interact {

// Builds a scalar loss on `tape` from leaves holding the probed inputs.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> leaves)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  // "<input name>[<flat index>]" of the worst coordinate.
  std::string worst;
  double worst_fd = 0.0;
  double worst_ad = 0.0;
};

// |a - b| / max(1e-8, |a| + |b|).
double RelativeGradError(double fd, double ad);

// Compares reverse-mode gradients of `loss` against central differences
// (f(x + eps e) - f(x - eps e)) / (2 eps) over every coordinate of every
// input. Throws NumericalError if any evaluation is non-finite and
// ContractError unless eps > 0.
GradCheckResult FiniteDiffCheck(const LossBuilder& loss,
                                const std::vector<Tensor>& inputs,
                                double eps = 1e-5,
                                const std::vector<std::string>& names = {});

}  // namespace interact

#endif  // INTERACT_GRADCHECK_H_
