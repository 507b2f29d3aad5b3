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

#include "interact/interactor.h"

#include <algorithm>
#include <limits>

#include "interact/errors.h"
#include "interact/ops.h"

namespace interact {
namespace {

Tensor PointTensor(std::span<const Vec2> points, double scale) {
  Tensor t({points.size(), 2});
  for (std::size_t i = 0; i < points.size(); ++i) {
    t.at(i, 0) = points[i].x * scale;
    t.at(i, 1) = points[i].y * scale;
  }
  return t;
}

double ClosestDistance(std::span<const Vec2> points, Vec2 agent) {
  double best = std::numeric_limits<double>::infinity();
  for (Vec2 p : points) best = std::min(best, (p - agent).Norm());
  return best;
}

}  // namespace

std::vector<Violation> QueryBundle::Check(const Config& config) const {
  std::vector<Violation> out;
  const std::size_t na = num_agents(), ni = num_instances();
  const std::size_t c = config.channels, np = config.num_points;
  if (!agent_queries.valid() || agent_queries.shape() != Shape{na, c}) {
    out.push_back({"agent_queries", 0, "expected shape " + ShapeToString({na, c})});
  }
  if (!map_queries.valid() || map_queries.shape() != Shape{ni, np, c}) {
    out.push_back({"map_queries", 0, "expected shape " + ShapeToString({ni, np, c})});
  }
  if (map_scores.size() != ni) {
    out.push_back({"map_scores", 0, "one score vector per map instance required"});
  }
  for (std::size_t i = 0; i < ni; ++i) {
    if (map_points[i].size() != np) {
      out.push_back({"map_points", i, "expected " + std::to_string(np) + " points"});
    }
    if (i < map_scores.size() && map_scores[i].size() != kNumMapClasses) {
      out.push_back({"map_scores", i, "expected one score per map class"});
    }
  }
  return out;
}

Var FormMotionQueries(Var agent_queries, Var mode_queries) {
  const Shape& a = agent_queries.shape();
  const Shape& m = mode_queries.shape();
  if (a.size() != 2 || m.size() != 2 || a[1] != m[1]) {
    throw DimensionError("form_motion_queries: channel mismatch " + ShapeToString(a) +
                         " and " + ShapeToString(m));
  }
  return Add(Expand(agent_queries, 1, m[0]), Expand(mode_queries, 0, a[0]));
}

Var AttentionBlock(Var queries, Var keys_values, std::optional<Var> key_pos,
                   const BoundParams& params, const std::string& prefix,
                   const Config& config) {
  Var attended = MultiHeadAttention(queries, keys_values, keys_values, key_pos,
                                    params.Attention(prefix + ".attn"), config.heads);
  const MlpParams ffn = params.Mlp(prefix + ".ffn");
  if (config.plain_blocks) return Mlp(attended, ffn);
  Var y = LayerNormLast(Add(queries, attended), params[prefix + ".norm1.gamma"],
                        params[prefix + ".norm1.beta"]);
  return LayerNormLast(Add(y, Mlp(y, ffn)), params[prefix + ".norm2.gamma"],
                       params[prefix + ".norm2.beta"]);
}

Var MotionSelfBlock(Var q_motion, const BoundParams& params, const Config& config) {
  const Shape s = q_motion.shape();
  if (s.size() != 3) {
    throw DimensionError("motion_self_block: expected [N_A x N_mode x C], got " +
                         ShapeToString(s));
  }
  Var tokens = Reshape(q_motion, {s[0] * s[1], s[2]});
  return Reshape(AttentionBlock(tokens, tokens, std::nullopt, params, "self", config), s);
}

std::vector<Vec2> NormalizeMapForAgent(std::span<const Vec2> points, Vec2 agent) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (Vec2 p : points) out.push_back(p - agent);
  return out;
}

std::vector<Vec2> EncodeTrajectory(std::span<const Vec2> positions, Vec2 anchor) {
  std::vector<Vec2> out;
  out.reserve(positions.size());
  Vec2 prev = anchor;
  for (Vec2 p : positions) {
    out.push_back(p - prev);
    prev = p;
  }
  return out;
}

std::vector<Vec2> DecodeTrajectory(std::span<const Vec2> offsets, Vec2 anchor) {
  std::vector<Vec2> out;
  out.reserve(offsets.size());
  Vec2 pos = anchor;
  for (Vec2 d : offsets) {
    pos = pos + d;
    out.push_back(pos);
  }
  return out;
}

std::vector<std::size_t> SelectMapInstances(
    std::span<const std::vector<double>> scores,
    std::span<const std::vector<Vec2>> points, Vec2 agent, double tau, double mu) {
  if (scores.size() != points.size()) {
    throw DimensionError("select_map_instances: " + std::to_string(scores.size()) +
                         " score vectors for " + std::to_string(points.size()) +
                         " instances");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (ArgMax(scores[i]).second < tau) continue;
    if (ClosestDistance(points[i], agent) > mu) continue;
    out.push_back(i);
  }
  return out;
}

FilteredMap FilterMapForAgent(const QueryBundle& bundle, std::size_t agent,
                              double tau, double mu) {
  const Vec2 pos = bundle.agent_positions.at(agent);
  FilteredMap out;
  out.indices = SelectMapInstances(bundle.map_scores, bundle.map_points, pos, tau, mu);
  if (out.indices.empty()) return out;
  out.queries = GatherRows(bundle.map_queries, out.indices);
  for (std::size_t i : out.indices) {
    out.normalized_points.push_back(NormalizeMapForAgent(bundle.map_points[i], pos));
  }
  return out;
}

Var EncodeMapInstances(Var selected, const BoundParams& params) {
  const Shape& s = selected.shape();
  if (s.size() != 3) {
    throw DimensionError("encode_map_instances: expected [N_sel x N_P x C], got " +
                         ShapeToString(s));
  }
  if (s[0] == 0) throw DomainError("encode_map_instances: no instances selected");
  Var h = selected;
  for (int l = 0; l < 3; ++l) {
    const std::string p = "vectornet.l" + std::to_string(l);
    Var points = Relu(Linear(h, params[p + ".w0"], params[p + ".b0"]));
    Var pooled = MaxPoolAxis(points, 1);
    const Var parts[] = {points, Expand(pooled, 1, s[1])};
    h = ConcatLast(parts);
  }
  return MaxPoolAxis(h, 1);
}

PositionEncoding MapPositionEncoding(
    std::span<const std::vector<Vec2>> normalized_points, const BoundParams& params,
    const Config& config) {
  PositionEncoding out;
  for (const auto& poly : normalized_points) {
    if (poly.empty()) throw DomainError("map_position_encoding: empty polyline");
    std::size_t best = 0;
    double best_norm = poly[0].Norm();
    for (std::size_t k = 1; k < poly.size(); ++k) {
      const double n = poly[k].Norm();
      if (n < best_norm) {
        best_norm = n;
        best = k;
      }
    }
    out.points.push_back(poly[best]);
  }
  Var pts = params.tape().Constant(PointTensor(out.points, 1.0 / config.half_range));
  // The encoding only enters attention keys, where an output bias would shift
  // every logit of a query equally, so the last layer has none.
  const MlpParams pe{{params["pe.w0"], params["pe.w1"]},
                     {params["pe.b0"], params.tape().Constant(Tensor({config.channels}))}};
  out.encoding = Mlp(pts, pe);
  return out;
}

Var MotionMapBlock(Var agent_motion, std::optional<Var> instances,
                   std::optional<Var> position_encoding, const BoundParams& params,
                   const Config& config) {
  if (!instances) {
    return agent_motion.tape()->Constant(Tensor(agent_motion.shape(), 0.0));
  }
  return AttentionBlock(agent_motion, *instances, position_encoding, params, "cross",
                        config);
}

Var FuseMotionQueries(Var q_sa, Var q_ca) {
  const Shape& a = q_sa.shape();
  const Shape& b = q_ca.shape();
  if (a.size() != b.size() || a.empty() ||
      !std::equal(a.begin(), a.end() - 1, b.begin())) {
    throw DimensionError("fuse_motion_queries: shape mismatch " + ShapeToString(a) +
                         " and " + ShapeToString(b));
  }
  const Var parts[] = {q_sa, q_ca};
  return ConcatLast(parts);
}

Var DecodeMotion(Var fused, const BoundParams& params, const Config& config) {
  const Shape& s = fused.shape();
  if (s.size() != 3) {
    throw DimensionError("decode_motion: expected [N_A x N_mode x 2C], got " +
                         ShapeToString(s));
  }
  Var raw = Mlp(fused, params.Mlp("motion_head"));
  return Reshape(raw, {s[0], s[1], config.horizon, 2});
}

PerceptionOutputs DecodePerception(const QueryBundle& bundle,
                                   const BoundParams& params, const Config& config) {
  Tape& tape = params.tape();
  PerceptionOutputs out;
  const std::size_t ni = bundle.num_instances();

  out.det_scores = Sigmoid(Mlp(bundle.agent_queries, params.Mlp("det_cls")));
  Var raw = Mlp(bundle.agent_queries, params.Mlp("det_reg"));
  const Var box[] = {SliceLast(raw, 0, 2), Softplus(SliceLast(raw, 2, 4)),
                     SliceLast(raw, 4, 5)};
  out.det_local = ConcatLast(box);
  out.det_anchors = Tensor({bundle.num_agents(), 5});
  for (std::size_t i = 0; i < bundle.num_agents(); ++i) {
    out.det_anchors[i * 5] = bundle.agent_positions[i].x;
    out.det_anchors[i * 5 + 1] = bundle.agent_positions[i].y;
  }
  out.det_boxes = Add(out.det_local, tape.Constant(out.det_anchors));

  Var pooled = MaxPoolAxis(bundle.map_queries, 1);
  out.map_scores = Sigmoid(Mlp(pooled, params.Mlp("map_cls")));
  Tensor base({ni, config.num_points, 2});
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t k = 0; k < config.num_points; ++k) {
      base[(i * config.num_points + k) * 2] = bundle.map_points[i][k].x;
      base[(i * config.num_points + k) * 2 + 1] = bundle.map_points[i][k].y;
    }
  }
  out.map_local = Mlp(bundle.map_queries, params.Mlp("map_reg"));
  out.map_anchors = std::move(base);
  out.map_points = Add(out.map_local, tape.Constant(out.map_anchors));
  return out;
}

ForwardOutputs Forward(const QueryBundle& bundle, const BoundParams& params,
                       const Config& config) {
  if (auto v = bundle.Check(config); !v.empty()) {
    throw DimensionError("query bundle: " + ToString(v.front()));
  }
  Tape& tape = params.tape();
  const std::size_t na = bundle.num_agents();
  const std::size_t modes = config.num_modes;
  const std::size_t c = config.channels;

  ForwardOutputs out;
  out.perception = DecodePerception(bundle, params, config);
  out.selected.resize(na);
  if (na == 0) {
    out.q_sa = tape.Constant(Tensor({0, modes, c}));
    out.q_ca = tape.Constant(Tensor({0, modes, c}));
    out.offsets = tape.Constant(Tensor({0, modes, config.horizon, 2}));
    return out;
  }

  Var q_motion = FormMotionQueries(bundle.agent_queries, params["mode_bank"]);
  out.q_sa = MotionSelfBlock(q_motion, params, config);

  std::vector<Var> cross;
  cross.reserve(na);
  for (std::size_t j = 0; j < na; ++j) {
    const std::size_t row[] = {j};
    Var motion_j = Reshape(GatherRows(out.q_sa, row), {modes, c});
    FilteredMap filtered =
        FilterMapForAgent(bundle, j, config.score_threshold, config.distance_threshold);
    out.selected[j] = filtered.indices;
    if (!filtered.queries) {
      cross.push_back(MotionMapBlock(motion_j, std::nullopt, std::nullopt, params, config));
      continue;
    }
    Var instances = EncodeMapInstances(*filtered.queries, params);
    PositionEncoding pe = MapPositionEncoding(filtered.normalized_points, params, config);
    cross.push_back(MotionMapBlock(motion_j, instances, pe.encoding, params, config));
  }
  out.q_ca = Stack(cross);
  out.offsets = DecodeMotion(FuseMotionQueries(out.q_sa, out.q_ca), params, config);
  return out;
}

PredictionSet ToPredictionSet(const ForwardOutputs& out, const std::string& scene_id,
                              const Config& config) {
  PredictionSet p;
  p.scene_id = scene_id;
  const Tensor& ms = out.perception.map_scores.value();
  const Tensor& mp = out.perception.map_points.value();
  const std::size_t ni = ms.dim(0);
  const std::size_t np = config.num_points;
  for (std::size_t i = 0; i < ni; ++i) {
    PredMapInstance m;
    for (int c = 0; c < kNumMapClasses; ++c) m.scores.push_back(ms.at(i, c));
    for (std::size_t k = 0; k < np; ++k) {
      m.points.push_back({mp[(i * np + k) * 2], mp[(i * np + k) * 2 + 1]});
    }
    p.map.push_back(std::move(m));
  }
  const Tensor& ds = out.perception.det_scores.value();
  const Tensor& db = out.perception.det_boxes.value();
  const Tensor& off = out.offsets.value();
  const std::size_t na = ds.dim(0);
  const std::size_t modes = config.num_modes, steps = config.horizon;
  for (std::size_t i = 0; i < na; ++i) {
    PredAgent a;
    for (int c = 0; c < kNumAgentClasses; ++c) a.scores.push_back(ds.at(i, c));
    a.center = {db.at(i, 0), db.at(i, 1)};
    a.size = {db.at(i, 2), db.at(i, 3)};
    a.yaw = db.at(i, 4);
    a.forecast.resize(modes);
    for (std::size_t k = 0; k < modes; ++k) {
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t at = ((i * modes + k) * steps + t) * 2;
        a.forecast[k].push_back({off[at], off[at + 1]});
      }
    }
    p.agents.push_back(std::move(a));
  }
  return p;
}

PredictionSet FullForward(const QueryBundle& bundle, const BoundParams& params,
                          const Config& config, const std::string& scene_id) {
  return ToPredictionSet(Forward(bundle, params, config), scene_id, config);
}

}  // namespace interact
