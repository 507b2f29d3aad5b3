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

// Procedural scenes, oracle predictions and query features. Every random
// draw comes from CounterRng keyed by (seed, scene index or id hash, stream),
// so each scene regenerates on its own.

#ifndef INTERACT_SYNTHGEN_H_
#define INTERACT_SYNTHGEN_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "interact/interactor.h"
#include "interact/params.h"
#include "interact/scene.h"

namespace interact {

enum class LaneFamily { kStraight, kArc, kSCurve, kMixed };

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t lanes = 2;
  LaneFamily family = LaneFamily::kMixed;
  std::size_t agents = 4;
  double speed_min = 2.0;  // m/s
  double speed_max = 12.0;
  double static_fraction = 0.2;  // share of agents that are cones or barriers
  double exit_fraction = 0.1;    // share of moving agents that leave the square
  double crossing_prob = 0.5;    // per lane

  // Per unit of perturbation noise level, standard deviations in meters.
  double map_noise = 0.3;
  double center_noise = 1.0;
  double traj_noise = 1.0;
  // Probability that an item's top class is replaced by a wrong one.
  double score_corruption = 0.0;
  // Kept items score 1 - eps with eps uniform in [0, score_eps].
  double score_eps = 0.05;
  // Random-walk sd (m per step) separating modes 1.. from mode 0.
  double mode_jitter = 0.5;
  std::size_t fp_agents = 0;  // false positives injected per scene
  std::size_t fp_map = 0;
  double drop_prob = 0.0;

  // Query synthesis: geometry comes from a perturbation at this level
  // (without drops or false positives); features get i.i.d. noise.
  double query_noise = 0.0;
  double feature_noise = 0.0;
};

// Two lanes without crossings (four map instances) and three moving agents.
GenConfig ToyGenConfig(std::uint64_t seed);

std::string_view LaneFamilyName(LaneFamily f);
std::string GenConfigToJson(const GenConfig& gen, int indent = 2);
// Reads a bare GenConfig object; unknown keys raise ParseError.
GenConfig GenConfigFromJson(std::string_view text, const GenConfig& base = GenConfig{});
// Reads the "gen" member of a run-config document, `base` if it is absent.
GenConfig GenConfigFromConfigDocument(std::string_view text,
                                      const GenConfig& base = GenConfig{});
// Scale or count fields that are out of range. Empty when usable.
std::vector<Violation> Validate(const GenConfig& gen);

// Coordinates are snapped to this grid so that translating a scene by a
// grid multiple is exact in floating point.
inline constexpr double kCoordinateGrid = 0x1.0p-20;
double SnapToGrid(double v);
Vec2 SnapToGrid(Vec2 v);

// Seconds per future step.
inline constexpr double kStepSeconds = 0.5;

// Throws GenerationError when the config cannot be satisfied.
Scene GenerateScene(const GenConfig& gen, const Config& config, std::size_t scene_index);
std::vector<Scene> GenerateScenes(const GenConfig& gen, const Config& config,
                                  std::size_t count);

// FNV-1a of the scene id; keys perturbation streams.
std::uint64_t SceneKey(std::string_view scene_id);

PredictionSet PerturbToPredictions(const Scene& scene, const GenConfig& gen,
                                   const Config& config, double noise);

// Learned class embeddings plus an MLP over pose (agents) or point
// coordinates (map), recorded on the params' tape.
QueryBundle SynthQueries(const Scene& scene, const BoundParams& params,
                         const GenConfig& gen, const Config& config);

}  // namespace interact

#endif  // INTERACT_SYNTHGEN_H_
