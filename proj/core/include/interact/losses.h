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

// Multi-task training objective. All terms are sums, not means.

#ifndef INTERACT_LOSSES_H_
#define INTERACT_LOSSES_H_

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "interact/interactor.h"
#include "interact/matching.h"
#include "interact/scene.h"
#include "interact/tensor.h"

namespace interact {

inline constexpr double kFocalClamp = 1e-7;

// One-vs-all focal term for a single class score. p is clamped to
// [1e-7, 1 - 1e-7] before the log.
double FocalTerm(double p, bool positive, double alpha, double gamma);

// Sum over all elements of FocalTerm(scores[i], targets[i] == 1). Scores and
// targets share one shape; targets hold 0 or 1.
Var FocalLoss(Var scores, const Tensor& targets, double alpha, double gamma);

// One-hot targets [N x num_classes]: row i is the class of its matched
// ground truth, all zeros for unmatched rows.
Tensor MatchedClassTargets(std::size_t num_pred, int num_classes,
                           const Assignment& assignment,
                           const std::vector<int>& gt_classes);

struct LossTerms {
  Var det_cls, det_reg, map_cls, map_reg, mot_reg;
  std::array<double, 5> Values() const;
};

// Focal classification over every predicted instance plus matched-pair
// Manhattan point regression under the chosen point order. With `anchors`
// ([N_I x N_P x 2]) the points are taken relative to them; the loss value is
// the same, but regressing in the anchor frame keeps the large absolute
// coordinates out of the rounding.
std::pair<Var, Var> MapLoss(Var scores, Var points, const Scene& gt,
                            const MapMatching& matching, const Config& config,
                            const Tensor* anchors = nullptr);

// Focal classification over every predicted agent plus L1 over (center,
// size, yaw) of matched pairs. `anchors` ([N_A x 5]) as for MapLoss.
std::pair<Var, Var> DetLoss(Var scores, Var boxes, const Scene& gt,
                            const Assignment& agents, const Config& config,
                            const Tensor* anchors = nullptr);

// Sentinel for pairs that carry no motion target.
inline constexpr std::size_t kNoMode = static_cast<std::size_t>(-1);

// Per matched pair, the mode with the smallest final-step L2 error against
// the ground truth, or kNoMode when the ground truth is not dynamic and
// complete. Forecasts are anchored at the ground-truth center.
std::vector<std::size_t> BestModes(const Tensor& offsets, const Scene& gt,
                                   const Assignment& agents, const Config& config);

// Winner-take-all L1 over the modes chosen by BestModes (recomputed from
// `offsets` unless `modes` is given).
Var MotionLoss(Var offsets, const Scene& gt, const Assignment& agents, const Config& config,
               const std::vector<std::size_t>* modes = nullptr);

// Index of the mode with the smallest final displacement, first on ties.
// `modes[k]` are absolute positions.
std::size_t BestModeByFde(const std::vector<std::vector<Vec2>>& modes,
                          Vec2 final_target);

Var TotalLoss(const LossTerms& terms, const std::array<double, 5>& weights);
double TotalLoss(const std::array<double, 5>& terms, const std::array<double, 5>& weights);

struct Matchings {
  Assignment agents;
  MapMatching map;
  std::vector<std::size_t> best_modes;  // parallel to agents.pairs
};
// Matchings and winning modes on the current output values; gradients
// never flow through them.
Matchings ComputeMatchings(const ForwardOutputs& outputs, const Scene& gt,
                           const Config& config);
LossTerms ComputeLosses(const ForwardOutputs& outputs, const Scene& gt,
                        const Matchings& matchings, const Config& config);

}  // namespace interact

#endif  // INTERACT_LOSSES_H_
