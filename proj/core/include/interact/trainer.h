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

// AdamW and the toy training loop.

#ifndef INTERACT_TRAINER_H_
#define INTERACT_TRAINER_H_

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interact/params.h"
#include "interact/scene.h"
#include "interact/synthgen.h"

namespace interact {

struct AdamWOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimState {
  AdamWOptions options;
  std::size_t step = 0;
  std::map<std::string, Tensor> m;  // first moments, shaped like params
  std::map<std::string, Tensor> v;  // second moments

  static OptimState For(const ModelParams& params, const AdamWOptions& options = {});
};

// theta <- theta * (1 - lr * wd), then the bias-corrected Adam step.
// Throws NumericalError naming the first parameter with a non-finite
// gradient, DimensionError on missing or misshapen gradients; in both cases
// nothing is modified.
void AdamWStep(ModelParams& params, const std::map<std::string, Tensor>& grads,
               OptimState& state);

// Loss values before the update of one step.
struct LossRecord {
  std::size_t step = 0;
  std::array<double, 5> terms{};  // det_cls, det_reg, map_cls, map_reg, mot_reg
  double total = 0.0;
};

struct TrainOptions {
  std::size_t steps = 0;
  AdamWOptions adam;
  // Scenes summed into one step's loss, taken round-robin from the input.
  std::size_t scenes_per_step = 1;
  double divergence_limit = 1e6;
  GenConfig gen;  // query synthesis
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> history;
  // Set when training stopped early (divergence or a non-finite gradient).
  std::optional<std::string> failure;
};

using LossSink = std::function<void(const LossRecord&)>;

struct StepOutput {
  LossRecord record;
  std::map<std::string, Tensor> grads;
};
// Forward, matching and backward for one batch of scenes at fixed params.
StepOutput ComputeStep(std::span<const Scene* const> batch, const ModelParams& params,
                       const Config& config, const GenConfig& gen);

TrainResult TrainToy(std::span<const Scene> scenes, ModelParams params, const Config& config,
                     const TrainOptions& options, const LossSink& sink = {});

// step,L_det_cls,L_det_reg,L_map_cls,L_map_reg,L_mot_reg,total
std::string LossHistoryCsvHeader();
std::string LossRecordCsvRow(const LossRecord& r);

}  // namespace interact

#endif  // INTERACT_TRAINER_H_
