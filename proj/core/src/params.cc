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

#include "interact/params.h"

#include <cmath>

#include "interact/errors.h"
#include "interact/rng.h"
#include "json.hpp"

namespace interact {
namespace {

constexpr std::size_t kAgentPoseFeatures = 5;  // x, y, cos yaw, sin yaw, speed

void AddMlp(std::map<std::string, Shape>& out, const std::string& prefix,
            std::initializer_list<std::size_t> sizes) {
  std::vector<std::size_t> s(sizes);
  for (std::size_t l = 0; l + 1 < s.size(); ++l) {
    out[prefix + ".w" + std::to_string(l)] = {s[l], s[l + 1]};
    out[prefix + ".b" + std::to_string(l)] = {s[l + 1]};
  }
}

void AddBlock(std::map<std::string, Shape>& out, const std::string& prefix,
              std::size_t c) {
  for (const char* p : {"q", "k", "v", "o"}) out[prefix + ".attn.w" + p] = {c, c};
  for (const char* p : {"q", "v", "o"}) out[prefix + ".attn.b" + p] = {c};
  for (const char* n : {".norm1", ".norm2"}) {
    out[prefix + n + ".gamma"] = {c};
    out[prefix + n + ".beta"] = {c};
  }
  AddMlp(out, prefix + ".ffn", {c, 2 * c, c});
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Last path component, e.g. "w0" for "pe.w0".
std::string_view Leaf(std::string_view name) {
  const auto dot = name.rfind('.');
  return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

}  // namespace

std::map<std::string, Shape> ParamShapes(const Config& config) {
  const std::size_t c = config.channels;
  const std::size_t half = c / 2;
  std::map<std::string, Shape> out;
  out["embed.agent_class"] = {static_cast<std::size_t>(kNumAgentClasses), c};
  AddMlp(out, "embed.agent_pose", {kAgentPoseFeatures, c, c});
  out["embed.map_class"] = {static_cast<std::size_t>(kNumMapClasses), c};
  AddMlp(out, "embed.map_point", {2, c, c});
  out["mode_bank"] = {config.num_modes, c};
  AddBlock(out, "self", c);
  AddBlock(out, "cross", c);
  for (int l = 0; l < 3; ++l) {
    const std::string p = "vectornet.l" + std::to_string(l);
    out[p + ".w0"] = {c, half};
    out[p + ".b0"] = {half};
  }
  AddMlp(out, "pe", {2, c, c});
  out.erase("pe.b1");  // see MapPositionEncoding
  AddMlp(out, "motion_head", {2 * c, 2 * c, 2 * config.horizon});
  AddMlp(out, "map_cls", {c, c, static_cast<std::size_t>(kNumMapClasses)});
  AddMlp(out, "map_reg", {c, c, 2});
  AddMlp(out, "det_cls", {c, c, static_cast<std::size_t>(kNumAgentClasses)});
  AddMlp(out, "det_reg", {c, c, 5});
  return out;
}

ModelParams ModelParams::Initialize(const Config& config, std::uint64_t seed) {
  ModelParams p;
  std::uint64_t stream = 0;
  for (const auto& [name, shape] : ParamShapes(config)) {
    Tensor t(shape);
    const std::string_view leaf = Leaf(name);
    CounterRng rng(seed, 0, stream++);
    if (name == "mode_bank") {
      for (std::size_t j = 0; j < shape[0]; ++j) t.at(j, j) = 1.0;
    } else if (leaf == "gamma") {
      for (double& v : t.data()) v = 1.0;
    } else if (EndsWith(name, "_class")) {
      for (double& v : t.data()) v = rng.Uniform(-1.0, 1.0);
    } else if (leaf.starts_with("w")) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (double& v : t.data()) v = rng.Uniform(-bound, bound);
    }
    p.tensors_.emplace(name, std::move(t));
  }
  return p;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ModelParams::NumScalars() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

std::vector<Violation> ModelParams::Check(const Config& config) const {
  std::vector<Violation> out;
  const auto shapes = ParamShapes(config);
  for (const auto& [name, shape] : shapes) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) {
      out.push_back({name, 0, "missing parameter"});
    } else if (it->second.shape() != shape) {
      out.push_back({name, 0,
                     "shape " + ShapeToString(it->second.shape()) + ", expected " +
                         ShapeToString(shape)});
    }
  }
  for (const auto& [name, _] : tensors_) {
    if (!shapes.contains(name)) out.push_back({name, 0, "orphan parameter"});
  }
  return out;
}

std::string ModelParams::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : tensors_) {
    j[name] = {{"shape", t.shape()}, {"values", t.values()}};
  }
  return j.dump();
}

ModelParams ModelParams::FromJson(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ParseError("parameters must be a JSON object");
    ModelParams p;
    for (const auto& [name, entry] : j.items()) {
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> values = entry.at("values").get<std::vector<double>>();
      try {
        p.tensors_.emplace(name, Tensor(std::move(shape), std::move(values)));
      } catch (const DimensionError& e) {
        throw ParseError("parameter '" + name + "': " + e.what());
      }
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("parameters: ") + e.what());
  }
}

BoundParams::BoundParams(const ModelParams& params, Tape& tape) : tape_(&tape) {
  for (const auto& [name, t] : params.tensors()) vars_.emplace(name, tape.Leaf(t));
}

BoundParams::BoundParams(const ModelParams& params, Tape& tape,
                         const std::map<std::string, Var>& overrides)
    : tape_(&tape) {
  for (const auto& [name, t] : params.tensors()) {
    auto it = overrides.find(name);
    if (it == overrides.end()) {
      vars_.emplace(name, tape.Constant(t));
      continue;
    }
    if (it->second.tape() != &tape || it->second.shape() != t.shape()) {
      throw ContractError("override for '" + name + "' is on another tape or misshapen");
    }
    vars_.emplace(name, it->second);
  }
  for (const auto& [name, v] : overrides) {
    if (!params.contains(name)) throw ContractError("unknown parameter '" + name + "'");
  }
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

MlpParams BoundParams::Mlp(const std::string& prefix) const {
  MlpParams p;
  for (int l = 0;; ++l) {
    auto w = vars_.find(prefix + ".w" + std::to_string(l));
    if (w == vars_.end()) break;
    p.weights.push_back(w->second);
    p.biases.push_back((*this)[prefix + ".b" + std::to_string(l)]);
  }
  if (p.weights.empty()) throw ContractError("no MLP parameters under '" + prefix + "'");
  return p;
}

AttentionParams BoundParams::Attention(const std::string& prefix) const {
  const auto& b = *this;
  return {b[prefix + ".wq"], b[prefix + ".bq"], b[prefix + ".wk"], b[prefix + ".wv"],
          b[prefix + ".bv"], b[prefix + ".wo"], b[prefix + ".bo"]};
}

std::map<std::string, Tensor> BoundParams::Collect(const Gradients& grads) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : vars_) out.emplace(name, grads[v]);
  return out;
}

}  // namespace interact
