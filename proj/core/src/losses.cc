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

#include "interact/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "interact/errors.h"
#include "interact/ops.h"
#include "interact/summation.h"

namespace interact {
namespace {

struct FocalValue {
  double loss;
  double dloss_dp;
};

FocalValue Focal(double p, bool positive, double alpha, double gamma) {
  const bool clamped = p < kFocalClamp || p > 1.0 - kFocalClamp;
  const double q = std::clamp(p, kFocalClamp, 1.0 - kFocalClamp);
  if (positive) {
    const double w = std::pow(1.0 - q, gamma);
    const double loss = -alpha * w * std::log(q);
    const double dw = gamma == 0.0 ? 0.0 : -gamma * std::pow(1.0 - q, gamma - 1.0);
    const double d = -alpha * (dw * std::log(q) + w / q);
    return {loss, clamped ? 0.0 : d};
  }
  const double w = std::pow(q, gamma);
  const double loss = -(1.0 - alpha) * w * std::log(1.0 - q);
  const double dw = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0);
  const double d = -(1.0 - alpha) * (dw * std::log(1.0 - q) - w / (1.0 - q));
  return {loss, clamped ? 0.0 : d};
}

Var Zero(Tape& tape) { return tape.Constant(Tensor::Scalar(0.0)); }

}  // namespace

double FocalTerm(double p, bool positive, double alpha, double gamma) {
  return Focal(p, positive, alpha, gamma).loss;
}

Var FocalLoss(Var scores, const Tensor& targets, double alpha, double gamma) {
  const Tensor& sv = scores.value();
  if (sv.shape() != targets.shape()) {
    throw DimensionError("focal_loss: scores " + ShapeToString(sv.shape()) +
                         " vs targets " + ShapeToString(targets.shape()));
  }
  KahanSum total;
  Tensor deriv(sv.shape());
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const FocalValue f = Focal(sv[i], targets[i] > 0.5, alpha, gamma);
    total.Add(f.loss);
    deriv[i] = f.dloss_dp;
  }
  return scores.tape()->Record(
      Tensor::Scalar(total.value()), {scores},
      [deriv = std::move(deriv)](const Tensor& g, GradSink& sink) {
        if (Tensor* gs = sink.For(0)) {
          for (std::size_t i = 0; i < deriv.size(); ++i) (*gs)[i] += g[0] * deriv[i];
        }
      });
}

Tensor MatchedClassTargets(std::size_t num_pred, int num_classes,
                           const Assignment& assignment,
                           const std::vector<int>& gt_classes) {
  Tensor t({num_pred, static_cast<std::size_t>(num_classes)});
  for (const auto& [p, g] : assignment.pairs) {
    const int c = gt_classes.at(g);
    if (c >= 0 && c < num_classes) t.at(p, c) = 1.0;
  }
  return t;
}

std::array<double, 5> LossTerms::Values() const {
  return {det_cls.value()[0], det_reg.value()[0], map_cls.value()[0],
          map_reg.value()[0], mot_reg.value()[0]};
}

std::pair<Var, Var> MapLoss(Var scores, Var points, const Scene& gt,
                            const MapMatching& matching, const Config& config,
                            const Tensor* anchors) {
  if (anchors != nullptr && anchors->shape() != points.shape()) {
    throw DimensionError("map_loss: anchors " + ShapeToString(anchors->shape()) +
                         " vs points " + ShapeToString(points.shape()));
  }
  Tape& tape = *scores.tape();
  std::vector<int> classes;
  for (const MapInstanceGT& m : gt.map_instances) classes.push_back(m.class_id);
  const std::size_t num_pred = scores.shape()[0];
  Var cls = FocalLoss(scores,
                      MatchedClassTargets(num_pred, kNumMapClasses, matching.assignment, classes),
                      config.focal_alpha, config.focal_gamma);
  std::vector<Var> residuals;
  const std::size_t np = config.num_points;
  for (std::size_t k = 0; k < matching.assignment.pairs.size(); ++k) {
    const auto [p, g] = matching.assignment.pairs[k];
    const PointMatching order = matching.point_orders.at(k);
    Tensor target({np, 2});
    for (std::size_t i = 0; i < np; ++i) {
      const Vec2 q = gt.map_instances[g].points.at(order.GtIndex(i, np));
      target.at(i, 0) = q.x;
      target.at(i, 1) = q.y;
      if (anchors != nullptr) {
        target.at(i, 0) -= (*anchors)[(p * np + i) * 2];
        target.at(i, 1) -= (*anchors)[(p * np + i) * 2 + 1];
      }
    }
    const std::size_t row[] = {p};
    Var pred = Reshape(GatherRows(points, row), {np, 2});
    residuals.push_back(Abs(Sub(pred, tape.Constant(std::move(target)))));
  }
  return {cls, residuals.empty() ? Zero(tape) : SumOf(residuals)};
}

std::pair<Var, Var> DetLoss(Var scores, Var boxes, const Scene& gt,
                            const Assignment& agents, const Config& config,
                            const Tensor* anchors) {
  if (anchors != nullptr && anchors->shape() != boxes.shape()) {
    throw DimensionError("det_loss: anchors " + ShapeToString(anchors->shape()) +
                         " vs boxes " + ShapeToString(boxes.shape()));
  }
  Tape& tape = *scores.tape();
  std::vector<int> classes;
  for (const AgentGT& a : gt.agents) classes.push_back(a.class_id);
  const std::size_t num_pred = scores.shape()[0];
  Var cls = FocalLoss(scores, MatchedClassTargets(num_pred, kNumAgentClasses, agents, classes),
                      config.focal_alpha, config.focal_gamma);
  std::vector<Var> residuals;
  for (const auto& [p, g] : agents.pairs) {
    const AgentGT& a = gt.agents[g];
    Tensor target({1, 5}, {a.center.x, a.center.y, a.size.x, a.size.y, a.yaw});
    if (anchors != nullptr) {
      for (std::size_t k = 0; k < 5; ++k) target[k] -= (*anchors)[p * 5 + k];
    }
    const std::size_t row[] = {p};
    residuals.push_back(Abs(Sub(GatherRows(boxes, row), tape.Constant(std::move(target)))));
  }
  return {cls, residuals.empty() ? Zero(tape) : SumOf(residuals)};
}

std::size_t BestModeByFde(const std::vector<std::vector<Vec2>>& modes,
                          Vec2 final_target) {
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k].empty()) continue;
    const double err = (modes[k].back() - final_target).Norm();
    if (err < best_err) {
      best_err = err;
      best = k;
    }
  }
  return best;
}

namespace {

void CheckOffsetsShape(const Shape& shape, const Config& config) {
  if (shape.size() != 4 || shape[1] != config.num_modes || shape[2] != config.horizon ||
      shape[3] != 2) {
    throw DimensionError("motion_loss: offsets shaped " + ShapeToString(shape));
  }
}

bool HasMotionTarget(const Scene& gt, const AgentGT& a, const Config& config) {
  return gt.IsDynamic(a.class_id) && a.complete && a.future.size() == config.horizon;
}

}  // namespace

std::vector<std::size_t> BestModes(const Tensor& offsets, const Scene& gt,
                                   const Assignment& agents, const Config& config) {
  CheckOffsetsShape(offsets.shape(), config);
  const std::size_t modes = config.num_modes, steps = config.horizon;
  std::vector<std::size_t> out;
  for (const auto& [p, g] : agents.pairs) {
    const AgentGT& a = gt.agents.at(g);
    if (!HasMotionTarget(gt, a, config)) {
      out.push_back(kNoMode);
      continue;
    }
    std::vector<std::vector<Vec2>> absolute(modes);
    for (std::size_t k = 0; k < modes; ++k) {
      Vec2 cur = a.center;
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t at = ((p * modes + k) * steps + t) * 2;
        cur = cur + Vec2{offsets[at], offsets[at + 1]};
        absolute[k].push_back(cur);
      }
    }
    out.push_back(BestModeByFde(absolute, a.future.back()));
  }
  return out;
}

Var MotionLoss(Var offsets, const Scene& gt, const Assignment& agents, const Config& config,
               const std::vector<std::size_t>* modes) {
  Tape& tape = *offsets.tape();
  CheckOffsetsShape(offsets.shape(), config);
  std::vector<std::size_t> computed;
  if (modes == nullptr) {
    computed = BestModes(offsets.value(), gt, agents, config);
    modes = &computed;
  }
  if (modes->size() != agents.pairs.size()) {
    throw DimensionError("motion_loss: " + std::to_string(modes->size()) + " modes for " +
                         std::to_string(agents.pairs.size()) + " pairs");
  }
  const std::size_t num_modes = config.num_modes, steps = config.horizon;
  std::vector<Var> residuals;
  for (std::size_t k = 0; k < agents.pairs.size(); ++k) {
    const auto [p, g] = agents.pairs[k];
    const std::size_t best = (*modes)[k];
    const AgentGT& a = gt.agents.at(g);
    if (best == kNoMode || !HasMotionTarget(gt, a, config)) continue;
    const std::size_t row[] = {p};
    // Positions relative to the anchor, [modes x steps x 2].
    Var rel = CumsumAxis(Reshape(GatherRows(offsets, row), {num_modes, steps, 2}), 1);
    Tensor target({steps, 2});
    for (std::size_t t = 0; t < steps; ++t) {
      const Vec2 d = a.future[t] - a.center;
      target.at(t, 0) = d.x;
      target.at(t, 1) = d.y;
    }
    const std::size_t mode_row[] = {best};
    Var chosen = Reshape(GatherRows(rel, mode_row), {steps, 2});
    residuals.push_back(Abs(Sub(chosen, tape.Constant(std::move(target)))));
  }
  return residuals.empty() ? Zero(tape) : SumOf(residuals);
}

Var TotalLoss(const LossTerms& t, const std::array<double, 5>& w) {
  const Var terms[] = {t.det_cls, t.det_reg, t.map_cls, t.map_reg, t.mot_reg};
  return SumOf(terms, w);
}

double TotalLoss(const std::array<double, 5>& t, const std::array<double, 5>& w) {
  KahanSum acc;
  for (std::size_t k = 0; k < 5; ++k) acc.Add(w[k] * t[k]);
  return acc.value();
}

Matchings ComputeMatchings(const ForwardOutputs& outputs, const Scene& gt,
                           const Config& config) {
  const PredictionSet values = ToPredictionSet(outputs, gt.scene_id, config);
  Matchings m;
  m.agents = MatchAgents(values.agents, gt.agents, config);
  m.map = MatchMapInstances(values.map, gt.map_instances, config);
  m.best_modes = BestModes(outputs.offsets.value(), gt, m.agents, config);
  return m;
}

LossTerms ComputeLosses(const ForwardOutputs& outputs, const Scene& gt,
                        const Matchings& matchings, const Config& config) {
  LossTerms t;
  const PerceptionOutputs& p = outputs.perception;
  std::tie(t.det_cls, t.det_reg) =
      DetLoss(p.det_scores, p.det_local, gt, matchings.agents, config, &p.det_anchors);
  std::tie(t.map_cls, t.map_reg) =
      MapLoss(p.map_scores, p.map_local, gt, matchings.map, config, &p.map_anchors);
  t.mot_reg = MotionLoss(outputs.offsets, gt, matchings.agents, config, &matchings.best_modes);
  return t;
}

}  // namespace interact
