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

#ifndef INTERACT_PARAMS_H_
#define INTERACT_PARAMS_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "interact/ops.h"
#include "interact/scene.h"
#include "interact/tensor.h"

namespace interact {

// Every parameter name and its shape for `config`.
std::map<std::string, Shape> ParamShapes(const Config& config);

// Named parameter store for the query embedders, interaction blocks and
// heads. Iteration order is lexicographic by name.
class ModelParams {
 public:
  ModelParams() = default;

  // Linear weights uniform in +-1/sqrt(fan_in), biases zero, layer-norm
  // gains one, mode bank set to identity rows (mutually orthogonal).
  static ModelParams Initialize(const Config& config, std::uint64_t seed);

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  bool contains(const std::string& name) const { return tensors_.contains(name); }
  std::size_t NumScalars() const;

  // Names missing from, or shaped differently than, ParamShapes(config),
  // plus names that config does not declare.
  std::vector<Violation> Check(const Config& config) const;

  // {"name": {"shape": [...], "values": [...]}, ...}; values round-trip
  // bit for bit.
  std::string ToJson() const;
  static ModelParams FromJson(std::string_view text);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

// ModelParams recorded as leaves of one tape.
class BoundParams {
 public:
  BoundParams(const ModelParams& params, Tape& tape);
  // Uses `overrides` for the named entries and records the rest as
  // constants, so only the overridden ones can receive gradients.
  BoundParams(const ModelParams& params, Tape& tape,
              const std::map<std::string, Var>& overrides);

  Var operator[](const std::string& name) const;
  // "<prefix>.w0", "<prefix>.b0", "<prefix>.w1", ...
  MlpParams Mlp(const std::string& prefix) const;
  // "<prefix>.wq", "<prefix>.bq", ... "<prefix>.bo".
  AttentionParams Attention(const std::string& prefix) const;
  Tape& tape() const { return *tape_; }
  const std::map<std::string, Var>& vars() const { return vars_; }

  // Gradient of every parameter (zeros where unreachable).
  std::map<std::string, Tensor> Collect(const Gradients& grads) const;

 private:
  Tape* tape_;
  std::map<std::string, Var> vars_;
};

}  // namespace interact

#endif  // INTERACT_PARAMS_H_
