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

#include "interact/matching.h"

#include <algorithm>
#include <limits>

#include "interact/errors.h"

namespace interact {
namespace {

// Rows <= cols. Returns, for every row, its assigned column.
std::vector<std::size_t> SolveRowsLeCols(const CostMatrix& a) {
  const std::size_t n = a.rows(), m = a.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials and matching as in the classic formulation; p[j] is
  // the row matched to column j, 0 if free.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

double ClassCost(std::span<const double> scores, int class_id) {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= scores.size()) return 1.0;
  return 1.0 - scores[class_id];
}

}  // namespace

std::optional<std::size_t> Assignment::GtFor(std::size_t pred) const {
  for (const auto& [p, g] : pairs) {
    if (p == pred) return g;
  }
  return std::nullopt;
}

double Assignment::TotalCost(const CostMatrix& cost) const {
  double total = 0.0;
  for (const auto& [p, g] : pairs) total += cost(p, g);
  return total;
}

Assignment Hungarian(const CostMatrix& cost) {
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (cost.rows() <= cost.cols()) {
    const auto cols = SolveRowsLeCols(cost);
    for (std::size_t r = 0; r < cols.size(); ++r) out.pairs.emplace_back(r, cols[r]);
  } else {
    CostMatrix t(cost.cols(), cost.rows());
    for (std::size_t r = 0; r < cost.rows(); ++r) {
      for (std::size_t c = 0; c < cost.cols(); ++c) t(c, r) = cost(r, c);
    }
    const auto rows = SolveRowsLeCols(t);
    for (std::size_t c = 0; c < rows.size(); ++c) out.pairs.emplace_back(rows[c], c);
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  return out;
}

std::pair<PointMatching, double> MatchPoints(std::span<const Vec2> pred,
                                             std::span<const Vec2> gt) {
  if (pred.size() != gt.size()) {
    throw DimensionError("match_points: " + std::to_string(pred.size()) +
                         " predicted vs " + std::to_string(gt.size()) +
                         " ground-truth points");
  }
  const std::size_t n = pred.size();
  double forward = 0.0, reversed = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    forward += (pred[k] - gt[k]).L1();
    reversed += (pred[k] - gt[n - 1 - k]).L1();
  }
  if (reversed < forward) return {PointMatching{PointOrder::kReversed}, reversed};
  return {PointMatching{PointOrder::kForward}, forward};
}

CostMatrix MapMatchingCost(std::span<const PredMapInstance> pred,
                           std::span<const MapInstanceGT> gt, const Config& config) {
  CostMatrix cost(pred.size(), gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const double geom = MatchPoints(pred[i].points, gt[j].points).second /
                          static_cast<double>(std::max<std::size_t>(gt[j].points.size(), 1));
      cost(i, j) = config.match_cls_weight * ClassCost(pred[i].scores, gt[j].class_id) +
                   config.match_geom_weight * geom;
    }
  }
  return cost;
}

MapMatching MatchMapInstances(std::span<const PredMapInstance> pred,
                              std::span<const MapInstanceGT> gt, const Config& config) {
  MapMatching out;
  out.assignment = Hungarian(MapMatchingCost(pred, gt, config));
  for (const auto& [p, g] : out.assignment.pairs) {
    out.point_orders.push_back(MatchPoints(pred[p].points, gt[g].points).first);
  }
  return out;
}

CostMatrix AgentMatchingCost(std::span<const PredAgent> pred,
                             std::span<const AgentGT> gt, const Config& config) {
  CostMatrix cost(pred.size(), gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      cost(i, j) = config.match_cls_weight * ClassCost(pred[i].scores, gt[j].class_id) +
                   config.match_geom_weight * (pred[i].center - gt[j].center).L1();
    }
  }
  return cost;
}

Assignment MatchAgents(std::span<const PredAgent> pred, std::span<const AgentGT> gt,
                       const Config& config) {
  return Hungarian(AgentMatchingCost(pred, gt, config));
}

}  // namespace interact
