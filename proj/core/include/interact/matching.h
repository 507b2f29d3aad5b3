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

// Set matching between predictions and ground truth. Matchings are computed
// on plain values and treated as constants by the losses.

#ifndef INTERACT_MATCHING_H_
#define INTERACT_MATCHING_H_

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "interact/scene.h"

namespace interact {

// Stand-in for an infinite cost inside assignment problems.
inline constexpr double kForbiddenCost = 1e6;

class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

// (prediction index, ground-truth index) pairs; each index at most once per
// side. Predictions absent from `pairs` are assigned to no object.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::optional<std::size_t> GtFor(std::size_t pred) const;
  double TotalCost(const CostMatrix& cost) const;
};

// Minimum-total-cost assignment of min(rows, cols) pairs (rows are
// predictions). O(n^2 m) shortest augmenting paths with potentials.
Assignment Hungarian(const CostMatrix& cost);

enum class PointOrder { kForward, kReversed };

struct PointMatching {
  PointOrder order = PointOrder::kForward;
  // Ground-truth point index matched to prediction point k.
  std::size_t GtIndex(std::size_t k, std::size_t num_points) const {
    return order == PointOrder::kForward ? k : num_points - 1 - k;
  }
};

// Picks the polyline direction of the ground truth minimising the summed
// Manhattan distance; forward wins ties. Throws DimensionError on unequal
// point counts.
std::pair<PointMatching, double> MatchPoints(std::span<const Vec2> pred,
                                             std::span<const Vec2> gt);

struct MapMatching {
  Assignment assignment;
  std::vector<PointMatching> point_orders;  // parallel to assignment.pairs
};

// Cost (i, j) = w_cls * (1 - score_i[class_j]) + w_geom * mean per-point
// Manhattan distance under the best point order.
CostMatrix MapMatchingCost(std::span<const PredMapInstance> pred,
                           std::span<const MapInstanceGT> gt, const Config& config);
MapMatching MatchMapInstances(std::span<const PredMapInstance> pred,
                              std::span<const MapInstanceGT> gt, const Config& config);

// Cost (i, j) = w_cls * (1 - score_i[class_j]) + w_geom * L1(center_i, center_j).
CostMatrix AgentMatchingCost(std::span<const PredAgent> pred,
                             std::span<const AgentGT> gt, const Config& config);
Assignment MatchAgents(std::span<const PredAgent> pred, std::span<const AgentGT> gt,
                       const Config& config);

}  // namespace interact

#endif  // INTERACT_MATCHING_H_
