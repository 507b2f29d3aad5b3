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

#include "interact/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "interact/errors.h"

namespace interact {
namespace {

double Evaluate(const LossBuilder& loss, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(tape.Leaf(t));
  Var out = loss(tape, leaves);
  if (out.value().size() != 1) {
    throw ContractError("gradient check needs a scalar loss, got " +
                        ShapeToString(out.shape()));
  }
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericalError("loss evaluated to a non-finite value");
  return v;
}

}  // namespace

double RelativeGradError(double fd, double ad) {
  return std::abs(fd - ad) / std::max(1e-8, std::abs(fd) + std::abs(ad));
}

GradCheckResult FiniteDiffCheck(const LossBuilder& loss,
                                const std::vector<Tensor>& inputs, double eps,
                                const std::vector<std::string>& names) {
  if (!(eps > 0.0)) throw ContractError("finite-difference step must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.Leaf(t));
    Var out = loss(tape, leaves);
    if (out.value().size() != 1 || !std::isfinite(out.value()[0])) {
      throw NumericalError("loss is not a finite scalar");
    }
    Gradients g = tape.Backward(out);
    for (const Var& leaf : leaves) analytic.push_back(g[leaf]);
  }

  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = inputs[k][i];
      probe[k][i] = original + eps;
      const double up = Evaluate(loss, probe);
      probe[k][i] = original - eps;
      const double down = Evaluate(loss, probe);
      probe[k][i] = original;
      const double fd = (up - down) / (2.0 * eps);
      const double err = RelativeGradError(fd, analytic[k][i]);
      ++result.coordinates;
      if (err > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = err;
        const std::string name =
            k < names.size() ? names[k] : "input" + std::to_string(k);
        result.worst = name + "[" + std::to_string(i) + "]";
        result.worst_fd = fd;
        result.worst_ad = analytic[k][i];
      }
    }
  }
  return result;
}

}  // namespace interact
