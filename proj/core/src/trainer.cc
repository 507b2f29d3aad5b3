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

#include "interact/trainer.h"

#include <charconv>
#include <cmath>

#include "interact/errors.h"
#include "interact/interactor.h"
#include "interact/losses.h"
#include "interact/ops.h"

namespace interact {
namespace {

std::string Num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

OptimState OptimState::For(const ModelParams& params, const AdamWOptions& options) {
  OptimState s;
  s.options = options;
  for (const auto& [name, t] : params.tensors()) {
    s.m.emplace(name, Tensor(t.shape()));
    s.v.emplace(name, Tensor(t.shape()));
  }
  return s;
}

void AdamWStep(ModelParams& params, const std::map<std::string, Tensor>& grads,
               OptimState& state) {
  for (const auto& [name, t] : params.tensors()) {
    auto g = grads.find(name);
    if (g == grads.end()) throw DimensionError("adamw: no gradient for '" + name + "'");
    if (g->second.shape() != t.shape()) {
      throw DimensionError("adamw: gradient of '" + name + "' is " +
                           ShapeToString(g->second.shape()) + ", parameter is " +
                           ShapeToString(t.shape()));
    }
    if (!g->second.AllFinite()) {
      throw NumericalError("adamw: non-finite gradient for '" + name + "'");
    }
    if (!state.m.contains(name) || state.m.at(name).shape() != t.shape() ||
        !state.v.contains(name) || state.v.at(name).shape() != t.shape()) {
      throw DimensionError("adamw: optimizer state does not mirror '" + name + "'");
    }
  }
  const AdamWOptions& o = state.options;
  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (auto& [name, t] : params.tensors()) {
    const Tensor& g = grads.at(name);
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      t[i] *= 1.0 - o.lr * o.weight_decay;
      t[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

StepOutput ComputeStep(std::span<const Scene* const> batch, const ModelParams& params,
                       const Config& config, const GenConfig& gen) {
  Tape tape;
  BoundParams bound(params, tape);
  StepOutput out;
  std::optional<Var> total;
  for (const Scene* scene : batch) {
    const QueryBundle bundle = SynthQueries(*scene, bound, gen, config);
    const ForwardOutputs fwd = Forward(bundle, bound, config);
    const Matchings matchings = ComputeMatchings(fwd, *scene, config);
    const LossTerms terms = ComputeLosses(fwd, *scene, matchings, config);
    const auto values = terms.Values();
    for (std::size_t k = 0; k < 5; ++k) out.record.terms[k] += values[k];
    Var loss = TotalLoss(terms, config.loss_weights);
    total = total ? Add(*total, loss) : loss;
  }
  if (!total) throw ContractError("compute_step: empty batch");
  out.record.total = total->value()[0];
  out.grads = bound.Collect(tape.Backward(*total));
  return out;
}

TrainResult TrainToy(std::span<const Scene> scenes, ModelParams params, const Config& config,
                     const TrainOptions& options, const LossSink& sink) {
  if (scenes.empty()) throw ContractError("train_toy: no scenes");
  if (options.scenes_per_step == 0) throw ConfigError("train_toy: scenes_per_step must be >= 1");
  if (auto v = params.Check(config); !v.empty()) {
    throw ConfigError("train_toy: params do not fit config: " + ToString(v.front()));
  }
  TrainResult result;
  OptimState state = OptimState::For(params, options.adam);
  std::size_t cursor = 0;
  for (std::size_t step = 0; step < options.steps; ++step) {
    std::vector<const Scene*> batch;
    for (std::size_t k = 0; k < options.scenes_per_step; ++k) {
      batch.push_back(&scenes[cursor]);
      cursor = (cursor + 1) % scenes.size();
    }
    StepOutput out = ComputeStep(batch, params, config, options.gen);
    out.record.step = step;
    result.history.push_back(out.record);
    if (sink) sink(out.record);
    if (!std::isfinite(out.record.total) || out.record.total > options.divergence_limit) {
      result.failure = "diverged at step " + std::to_string(step) + ": total loss " +
                       Num(out.record.total);
      break;
    }
    try {
      AdamWStep(params, out.grads, state);
    } catch (const NumericalError& e) {
      result.failure = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
  }
  result.params = std::move(params);
  return result;
}

std::string LossHistoryCsvHeader() {
  return "step,L_det_cls,L_det_reg,L_map_cls,L_map_reg,L_mot_reg,total\n";
}

std::string LossRecordCsvRow(const LossRecord& r) {
  std::string row = std::to_string(r.step);
  for (double t : r.terms) row += "," + Num(t);
  return row + "," + Num(r.total) + "\n";
}

}  // namespace interact
