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

// End-to-end evaluation. Motion metrics (EPA, minADE, minFDE, MR) only look
// at dynamic classes; a predicted agent counts as class c when c is its
// argmax score and that score reaches config.pred_score_threshold.

#ifndef INTERACT_METRICS_H_
#define INTERACT_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "interact/scene.h"
#include "interact/summation.h"

namespace interact {

// Forecast of `pred` as absolute positions: the center plus cumulative
// offsets, one vector per mode.
std::vector<std::vector<Vec2>> AbsoluteForecast(const PredAgent& pred);

struct AgentDisplacement {
  double min_ade = 0.0;
  double min_fde = 0.0;
};
// Mode-minimum ADE and FDE against a full-length future. Throws
// DimensionError when lengths differ or there are no modes.
AgentDisplacement Displacement(const PredAgent& pred, const AgentGT& gt);

struct DisplacementSummary {
  std::optional<double> min_ade, min_fde, miss_rate;  // absent when count == 0
  std::size_t count = 0;
  std::size_t hits = 0;
  double ade_sum = 0.0, fde_sum = 0.0;
};
// Means over matched pairs whose ground truth is complete; `pairs` index
// into `preds` and `gts`.
DisplacementSummary DisplacementMetrics(
    std::span<const PredAgent> preds, std::span<const AgentGT> gts,
    std::span<const std::pair<std::size_t, std::size_t>> pairs, const Config& config);

struct EpaCounts {
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;   // |S_hat| after class and score filtering
  std::size_t num_match = 0;
  std::size_t num_hit = 0;
  std::size_t num_fp() const { return num_pred - num_match; }
  EpaCounts& operator+=(const EpaCounts& o);
};

struct EpaSceneResult {
  EpaCounts counts;
  // (prediction, ground truth) index pairs into the scene's agent lists.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
};
// Per dynamic class: candidates within config.epa_threshold of a ground
// truth, resolved greedily by ascending distance (or by Hungarian when
// configured). Incomplete ground truth is never a hit.
EpaSceneResult EpaScene(const Scene& gt, const PredictionSet& preds, const Config& config);
std::optional<double> EpaFromCounts(const EpaCounts& counts, double alpha);

// Mean of the two directed mean nearest-point distances.
double ChamferDistance(std::span<const Vec2> a, std::span<const Vec2> b);

// 101-point interpolated average precision from ranked true-positive flags.
double InterpolatedAp(const std::vector<bool>& ranked_tp, std::size_t num_gt);

// Per-class AP plus the mean over classes that have ground truth.
struct ApSummary {
  std::map<int, double> per_class;
  std::optional<double> mean;
};
// Absent (nullopt) when no scene holds ground truth of `class_id`.
std::optional<double> ChamferMapAp(std::span<const Scene> scenes,
                                   std::span<const PredictionSet> preds, int class_id,
                                   double threshold);
ApSummary ChamferMapApAll(std::span<const Scene> scenes,
                          std::span<const PredictionSet> preds, double threshold);
std::optional<double> DetApClass(std::span<const Scene> scenes,
                                 std::span<const PredictionSet> preds, int class_id,
                                 double threshold);
ApSummary DetAp(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                std::span<const double> thresholds);

struct SceneMetrics {
  std::string scene_id;
  EpaCounts counts;
  std::optional<double> epa;
  DisplacementSummary displacement;
};

struct MetricsReport {
  std::optional<double> epa, min_ade, min_fde, miss_rate;
  ApSummary map_ap, det_ap;
  EpaCounts counts;
  std::size_t num_valid_trajectories = 0;
  double tau_epa = 0.0;
  double alpha = 0.0;
  std::vector<SceneMetrics> per_scene;
};

// Pairs scenes and predictions by position; throws ValidationError naming
// the first scene id that does not line up.
MetricsReport Evaluate(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                       const Config& config);

std::string ReportToJson(const MetricsReport& report, int indent = 2);
// Header plus one row per labelled report.
std::string ReportsToCsv(std::span<const std::pair<std::string, MetricsReport>> rows);

}  // namespace interact

#endif  // INTERACT_METRICS_H_
