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

// Ground truth, predictions and run configuration. All coordinates are
// meters in the ego frame at the current timestamp unless stated otherwise.

#ifndef INTERACT_SCENE_H_
#define INTERACT_SCENE_H_

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace interact {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double Norm() const { return std::hypot(x, y); }
  double L1() const { return std::abs(x) + std::abs(y); }
};

enum AgentClass : int { kCar = 0, kPedestrian = 1, kTrafficCone = 2, kBarrier = 3 };
inline constexpr int kNumAgentClasses = 4;
enum MapClass : int { kDivider = 0, kCrossing = 1, kBoundary = 2 };
inline constexpr int kNumMapClasses = 3;

std::string_view AgentClassName(int class_id);
std::string_view MapClassName(int class_id);
bool IsStaticAgentClass(int class_id);
// {car, pedestrian}.
std::vector<int> DefaultDynamicClasses();

enum class EpaMatching { kGreedy, kHungarian };

struct Config {
  std::size_t num_points = 10;   // points per map instance
  std::size_t num_modes = 6;     // mode queries
  std::size_t horizon = 12;      // future steps at 2 Hz
  std::size_t channels = 256;
  std::size_t heads = 8;
  double score_threshold = 0.5;      // agent-wise filter confidence
  double distance_threshold = 20.5;  // agent-wise filter range, m
  double epa_threshold = 2.0;        // m
  double fp_penalty = 0.5;
  // det_cls, det_reg, map_cls, map_reg, mot_reg.
  std::array<double, 5> loss_weights{0.8, 0.1, 0.8, 0.4, 0.2};
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double chamfer_threshold = 1.5;  // m
  double half_range = 51.2;        // m
  // Drops residual connections and layer norms from the attention blocks.
  bool plain_blocks = false;
  // Predicted agents below this max-class score are not counted by EPA.
  double pred_score_threshold = 0.3;
  std::vector<double> det_ap_thresholds{0.5, 1.0, 2.0, 4.0};
  double match_cls_weight = 1.0;
  double match_geom_weight = 1.0;
  EpaMatching epa_matching = EpaMatching::kGreedy;

  // Desk-scale configuration used by gradient checks and the toy trainer.
  static Config Tiny();
};

struct MapInstanceGT {
  int class_id = kDivider;
  std::vector<Vec2> points;
  friend bool operator==(const MapInstanceGT&, const MapInstanceGT&) = default;
};

struct AgentGT {
  int class_id = kCar;
  Vec2 center;
  Vec2 size{4.5, 1.9};  // (length, width)
  double yaw = 0.0;
  std::vector<Vec2> future;  // absolute positions, one per future step
  bool complete = true;
  friend bool operator==(const AgentGT&, const AgentGT&) = default;
};

struct Scene {
  std::string scene_id;
  std::vector<MapInstanceGT> map_instances;
  std::vector<AgentGT> agents;
  std::vector<int> dynamic_classes = DefaultDynamicClasses();
  bool IsDynamic(int class_id) const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct PredMapInstance {
  std::vector<double> scores;  // per map class
  std::vector<Vec2> points;
  friend bool operator==(const PredMapInstance&, const PredMapInstance&) = default;
};

struct PredAgent {
  std::vector<double> scores;  // per agent class
  Vec2 center;
  Vec2 size{1.0, 1.0};
  double yaw = 0.0;
  // forecast[mode][step]: per-step offsets relative to the agent center.
  std::vector<std::vector<Vec2>> forecast;
  friend bool operator==(const PredAgent&, const PredAgent&) = default;
};

struct PredictionSet {
  std::string scene_id;
  std::vector<PredMapInstance> map;
  std::vector<PredAgent> agents;
  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

// Index of the largest score (first on ties) and that score. Returns
// {-1, 0} for an empty list.
std::pair<int, double> ArgMax(std::span<const double> scores);

struct Violation {
  std::string field;  // e.g. "map_instances[2].points"
  std::size_t index = 0;
  std::string rule;
  friend bool operator==(const Violation&, const Violation&) = default;
};
std::string ToString(const Violation& v);

// Structural checks; an empty result means every invariant holds. Never
// throws on finite or non-finite numeric content.
std::vector<Violation> Validate(const Scene& scene, const Config& config);
std::vector<Violation> Validate(const PredictionSet& preds, const Config& config);
std::vector<Violation> Validate(const Config& config);
// Duplicate scene ids within one file.
std::vector<Violation> ValidateUniqueIds(std::span<const Scene> scenes);

}  // namespace interact

#endif  // INTERACT_SCENE_H_
