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

// Motion interactor: motion-query formation, joint self-attention over
// (agent, mode) tokens, agent-centric map normalisation and filtering,
// polyline map encoding, motion-map cross-attention with positional keys,
// and the decoding heads.

#ifndef INTERACT_INTERACTOR_H_
#define INTERACT_INTERACTOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interact/params.h"
#include "interact/scene.h"
#include "interact/tensor.h"

namespace interact {

// Query features and the decoded geometry they stand for. Agent queries are
// [N_A x C]; map queries are [N_I x N_P x C].
struct QueryBundle {
  Var agent_queries;
  std::vector<Vec2> agent_positions;
  Var map_queries;
  std::vector<std::vector<Vec2>> map_points;
  std::vector<std::vector<double>> map_scores;

  std::size_t num_agents() const { return agent_positions.size(); }
  std::size_t num_instances() const { return map_points.size(); }
  std::vector<Violation> Check(const Config& config) const;
};

// out[i][j] = agent_queries[i] + mode_queries[j]; [N_A x N_mode x C].
Var FormMotionQueries(Var agent_queries, Var mode_queries);

// Attention followed by a feed-forward layer, each wrapped in a residual
// connection and layer norm unless config.plain_blocks.
Var AttentionBlock(Var queries, Var keys_values, std::optional<Var> key_pos,
                   const BoundParams& params, const std::string& prefix,
                   const Config& config);

// Joint self-attention over all N_A * N_mode motion queries.
Var MotionSelfBlock(Var q_motion, const BoundParams& params, const Config& config);

// p - agent for every point.
std::vector<Vec2> NormalizeMapForAgent(std::span<const Vec2> points, Vec2 agent);

// Per-step offsets from absolute positions, anchored at `anchor` for the
// first step. DecodeTrajectory is the running sum from the anchor.
std::vector<Vec2> EncodeTrajectory(std::span<const Vec2> positions, Vec2 anchor);
std::vector<Vec2> DecodeTrajectory(std::span<const Vec2> offsets, Vec2 anchor);

// Instances with max class score >= tau and closest point within mu of the
// agent, in original order.
std::vector<std::size_t> SelectMapInstances(
    std::span<const std::vector<double>> scores,
    std::span<const std::vector<Vec2>> points, Vec2 agent, double tau, double mu);

struct FilteredMap {
  std::vector<std::size_t> indices;
  std::optional<Var> queries;  // [N_sel x N_P x C]; empty when nothing passes
  std::vector<std::vector<Vec2>> normalized_points;
};
FilteredMap FilterMapForAgent(const QueryBundle& bundle, std::size_t agent,
                              double tau, double mu);

// Three subgraph layers (per-point linear + ReLU, max-pool over the
// instance, pooled feature concatenated onto every point) and a final
// max-pool: [N_sel x N_P x C] -> [N_sel x C]. Throws DomainError on N_sel = 0.
Var EncodeMapInstances(Var selected, const BoundParams& params);

struct PositionEncoding {
  std::vector<Vec2> points;  // representative point per instance
  Var encoding;              // [N_sel x C]
};
// Representative point = the smallest-norm point of each agent-normalised
// polyline (first on ties); encoded by the "pe" MLP after dividing by the
// perception half-range.
PositionEncoding MapPositionEncoding(
    std::span<const std::vector<Vec2>> normalized_points, const BoundParams& params,
    const Config& config);

// Cross-attention from one agent's [N_mode x C] motion queries onto its
// filtered map instances; zeros when the filtered set is empty.
Var MotionMapBlock(Var agent_motion, std::optional<Var> instances,
                   std::optional<Var> position_encoding, const BoundParams& params,
                   const Config& config);

// Channel concatenation, self-attention features first.
Var FuseMotionQueries(Var q_sa, Var q_ca);

// [N_A x N_mode x 2C] -> per-step offsets [N_A x N_mode x T_f x 2].
Var DecodeMotion(Var fused, const BoundParams& params, const Config& config);

struct PerceptionOutputs {
  Var det_scores;  // [N_A x kNumAgentClasses], sigmoid
  Var det_boxes;   // [N_A x 5]: center x, y, length, width, yaw
  Var map_scores;  // [N_I x kNumMapClasses], sigmoid
  Var map_points;  // [N_I x N_P x 2]
  // The same outputs before the bundle geometry is added back:
  // det_boxes = det_local + det_anchors, map_points = map_local + map_anchors.
  Var det_local, map_local;
  Tensor det_anchors, map_anchors;
};
// Box centers and map points regress residuals on the bundle geometry.
PerceptionOutputs DecodePerception(const QueryBundle& bundle,
                                   const BoundParams& params, const Config& config);

struct ForwardOutputs {
  PerceptionOutputs perception;
  Var q_sa;     // [N_A x N_mode x C]
  Var q_ca;     // [N_A x N_mode x C]
  Var offsets;  // [N_A x N_mode x T_f x 2]
  std::vector<std::vector<std::size_t>> selected;  // filtered instances per agent
};
ForwardOutputs Forward(const QueryBundle& bundle, const BoundParams& params,
                       const Config& config);

PredictionSet ToPredictionSet(const ForwardOutputs& out, const std::string& scene_id,
                              const Config& config);

// Forward followed by ToPredictionSet.
PredictionSet FullForward(const QueryBundle& bundle, const BoundParams& params,
                          const Config& config, const std::string& scene_id);

}  // namespace interact

#endif  // INTERACT_INTERACTOR_H_
