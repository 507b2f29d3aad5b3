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

#include "interact/scene.h"

#include <algorithm>
#include <set>

namespace interact {
namespace {

bool Finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

std::string Field(std::string_view base, std::size_t i, std::string_view member) {
  std::string out(base);
  out += "[" + std::to_string(i) + "]";
  if (!member.empty()) {
    out += ".";
    out += member;
  }
  return out;
}

void CheckScores(std::span<const double> scores, std::size_t expected,
                 const std::string& field, std::size_t index,
                 std::vector<Violation>& out) {
  if (scores.size() != expected) {
    out.push_back({field, index,
                   "expected " + std::to_string(expected) + " class scores, got " +
                       std::to_string(scores.size())});
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      out.push_back({field, index, "score outside [0,1]"});
      break;
    }
  }
}

}  // namespace

std::string_view AgentClassName(int class_id) {
  switch (class_id) {
    case kCar: return "car";
    case kPedestrian: return "pedestrian";
    case kTrafficCone: return "traffic_cone";
    case kBarrier: return "barrier";
    default: return "unknown";
  }
}

std::string_view MapClassName(int class_id) {
  switch (class_id) {
    case kDivider: return "divider";
    case kCrossing: return "crossing";
    case kBoundary: return "boundary";
    default: return "unknown";
  }
}

bool IsStaticAgentClass(int class_id) {
  return class_id == kTrafficCone || class_id == kBarrier;
}

std::vector<int> DefaultDynamicClasses() { return {kCar, kPedestrian}; }

Config Config::Tiny() {
  Config c;
  c.num_points = 4;
  c.num_modes = 2;
  c.horizon = 3;
  c.channels = 8;
  c.heads = 2;
  return c;
}

bool Scene::IsDynamic(int class_id) const {
  return std::find(dynamic_classes.begin(), dynamic_classes.end(), class_id) !=
         dynamic_classes.end();
}

std::pair<int, double> ArgMax(std::span<const double> scores) {
  if (scores.empty()) return {-1, 0.0};
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  }
  return {best, scores[best]};
}

std::string ToString(const Violation& v) {
  return v.field + " (index " + std::to_string(v.index) + "): " + v.rule;
}

std::vector<Violation> Validate(const Scene& scene, const Config& config) {
  std::vector<Violation> out;
  const double r = config.half_range;
  for (std::size_t i = 0; i < scene.map_instances.size(); ++i) {
    const MapInstanceGT& m = scene.map_instances[i];
    if (m.class_id < 0 || m.class_id >= kNumMapClasses) {
      out.push_back({Field("map_instances", i, "class_id"), i, "unknown map class"});
    }
    if (m.points.size() != config.num_points) {
      out.push_back({Field("map_instances", i, "points"), i,
                     "expected " + std::to_string(config.num_points) +
                         " points, got " + std::to_string(m.points.size())});
    }
    for (Vec2 p : m.points) {
      if (!Finite(p)) {
        out.push_back({Field("map_instances", i, "points"), i, "non-finite coordinate"});
        break;
      }
      if (std::abs(p.x) > r || std::abs(p.y) > r) {
        out.push_back({Field("map_instances", i, "points"), i,
                       "coordinate outside perception range"});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const AgentGT& a = scene.agents[i];
    if (a.class_id < 0 || a.class_id >= kNumAgentClasses) {
      out.push_back({Field("agents", i, "class_id"), i, "unknown agent class"});
    }
    if (!Finite(a.center) || !std::isfinite(a.yaw)) {
      out.push_back({Field("agents", i, "center"), i, "non-finite pose"});
    }
    if (!(a.size.x > 0.0 && a.size.y > 0.0)) {
      out.push_back({Field("agents", i, "size"), i, "size components must be > 0"});
    }
    if (a.complete && a.future.size() != config.horizon) {
      out.push_back({Field("agents", i, "future"), i,
                     "complete trajectory needs " + std::to_string(config.horizon) +
                         " steps, got " + std::to_string(a.future.size())});
    }
    if (!a.complete && a.future.size() > config.horizon) {
      out.push_back({Field("agents", i, "future"), i, "trajectory longer than horizon"});
    }
    if (!std::all_of(a.future.begin(), a.future.end(), Finite)) {
      out.push_back({Field("agents", i, "future"), i, "non-finite coordinate"});
    }
  }
  for (std::size_t i = 0; i < scene.dynamic_classes.size(); ++i) {
    if (IsStaticAgentClass(scene.dynamic_classes[i])) {
      out.push_back({Field("dynamic_classes", i, ""), i,
                     "static class " +
                         std::string(AgentClassName(scene.dynamic_classes[i])) +
                         " cannot be dynamic"});
    }
  }
  return out;
}

std::vector<Violation> Validate(const PredictionSet& preds, const Config& config) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < preds.map.size(); ++i) {
    const PredMapInstance& m = preds.map[i];
    CheckScores(m.scores, kNumMapClasses, Field("map", i, "scores"), i, out);
    if (m.points.size() != config.num_points) {
      out.push_back({Field("map", i, "points"), i,
                     "expected " + std::to_string(config.num_points) +
                         " points, got " + std::to_string(m.points.size())});
    }
    if (!std::all_of(m.points.begin(), m.points.end(), Finite)) {
      out.push_back({Field("map", i, "points"), i, "non-finite coordinate"});
    }
  }
  for (std::size_t i = 0; i < preds.agents.size(); ++i) {
    const PredAgent& a = preds.agents[i];
    CheckScores(a.scores, kNumAgentClasses, Field("agents", i, "scores"), i, out);
    if (!Finite(a.center) || !Finite(a.size) || !std::isfinite(a.yaw)) {
      out.push_back({Field("agents", i, "center"), i, "non-finite box"});
    }
    if (a.forecast.size() != config.num_modes) {
      out.push_back({Field("agents", i, "forecast"), i,
                     "expected " + std::to_string(config.num_modes) +
                         " modes, got " + std::to_string(a.forecast.size())});
    }
    for (std::size_t k = 0; k < a.forecast.size(); ++k) {
      if (a.forecast[k].size() != config.horizon) {
        out.push_back({Field("agents", i, "forecast"), i,
                       "mode " + std::to_string(k) + " has " +
                           std::to_string(a.forecast[k].size()) + " offsets, expected " +
                           std::to_string(config.horizon)});
      }
      if (!std::all_of(a.forecast[k].begin(), a.forecast[k].end(), Finite)) {
        out.push_back({Field("agents", i, "forecast"), i, "non-finite offset"});
      }
    }
  }
  return out;
}

std::vector<Violation> Validate(const Config& c) {
  std::vector<Violation> out;
  auto add = [&](const char* field, const char* rule) { out.push_back({field, 0, rule}); };
  if (!(c.score_threshold >= 0.0 && c.score_threshold <= 1.0)) add("tau", "must lie in [0,1]");
  if (!(c.distance_threshold > 0.0)) add("mu", "must be > 0");
  if (c.horizon < 1) add("T_f", "must be >= 1");
  if (c.num_modes < 1) add("N_mode", "must be >= 1");
  if (c.num_points < 1) add("N_P", "must be >= 1");
  if (c.channels < 2 || c.channels % 2 != 0) add("C", "must be a positive even number");
  if (c.heads < 1 || c.channels % c.heads != 0) add("heads", "must divide C");
  if (c.num_modes > c.channels) add("N_mode", "must not exceed C (orthogonal mode bank)");
  for (double w : c.loss_weights) {
    if (!(w >= 0.0)) add("lambda", "weights must be >= 0");
  }
  if (!(c.epa_threshold > 0.0)) add("tau_EPA", "must be > 0");
  if (!(c.chamfer_threshold > 0.0)) add("chamfer_threshold", "must be > 0");
  if (!(c.half_range > 0.0)) add("half_range", "must be > 0");
  if (!(c.focal_alpha >= 0.0 && c.focal_alpha <= 1.0)) add("focal_alpha", "must lie in [0,1]");
  if (!(c.focal_gamma >= 0.0)) add("focal_gamma", "must be >= 0");
  return out;
}

std::vector<Violation> ValidateUniqueIds(std::span<const Scene> scenes) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!seen.insert(scenes[i].scene_id).second) {
      out.push_back({"scene_id", i, "duplicate scene id '" + scenes[i].scene_id + "'"});
    }
  }
  return out;
}

}  // namespace interact
