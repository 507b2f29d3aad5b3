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

#include "interact/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "interact/errors.h"
#include "interact/matching.h"
#include "json.hpp"

namespace interact {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

std::vector<int> UniqueClasses(const std::vector<int>& classes) {
  std::set<int> s(classes.begin(), classes.end());
  return {s.begin(), s.end()};
}

// Greedy one-to-one resolution of (cost, row, col) candidates.
Pairs GreedyResolve(std::vector<std::tuple<double, std::size_t, std::size_t>> cands) {
  std::sort(cands.begin(), cands.end());
  std::set<std::size_t> used_rows, used_cols;
  Pairs out;
  for (const auto& [cost, r, c] : cands) {
    if (used_rows.count(r) || used_cols.count(c)) continue;
    used_rows.insert(r);
    used_cols.insert(c);
    out.emplace_back(r, c);
  }
  return out;
}

double NearestPointMean(std::span<const Vec2> from, std::span<const Vec2> to) {
  KahanSum s;
  for (const Vec2& p : from) {
    double best = kInf;
    for (const Vec2& q : to) best = std::min(best, (p - q).Norm());
    s.Add(best);
  }
  return s.value() / static_cast<double>(from.size());
}

struct Ranked {
  double score;
  std::size_t scene;
  std::size_t index;
};

// Descending score, then input order.
void SortRanked(std::vector<Ranked>& r) {
  std::stable_sort(r.begin(), r.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
}

std::optional<double> MeanOf(const std::map<int, double>& m) {
  if (m.empty()) return std::nullopt;
  KahanSum s;
  for (const auto& [c, v] : m) s.Add(v);
  return s.value() / static_cast<double>(m.size());
}

nlohmann::ordered_json OptJson(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json CountsJson(const EpaCounts& c) {
  nlohmann::ordered_json j;
  j["num_gt"] = c.num_gt;
  j["num_pred"] = c.num_pred;
  j["num_match"] = c.num_match;
  j["num_hit"] = c.num_hit;
  j["num_fp"] = c.num_fp();
  return j;
}

nlohmann::ordered_json ApJson(const ApSummary& ap, bool map_classes) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [c, v] : ap.per_class) {
    per[std::string(map_classes ? MapClassName(c) : AgentClassName(c))] = v;
  }
  j["per_class"] = per;
  j["mean"] = OptJson(ap.mean);
  return j;
}

std::string CsvNumber(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, end);
}

}  // namespace

std::vector<std::vector<Vec2>> AbsoluteForecast(const PredAgent& pred) {
  std::vector<std::vector<Vec2>> out;
  out.reserve(pred.forecast.size());
  for (const auto& mode : pred.forecast) {
    std::vector<Vec2> pos;
    pos.reserve(mode.size());
    Vec2 cur = pred.center;
    for (const Vec2& d : mode) {
      cur = cur + d;
      pos.push_back(cur);
    }
    out.push_back(std::move(pos));
  }
  return out;
}

AgentDisplacement Displacement(const PredAgent& pred, const AgentGT& gt) {
  if (pred.forecast.empty()) throw DimensionError("displacement: forecast has no modes");
  const auto modes = AbsoluteForecast(pred);
  AgentDisplacement best{kInf, kInf};
  for (const auto& mode : modes) {
    if (mode.size() != gt.future.size() || mode.empty()) {
      throw DimensionError("displacement: forecast of " + std::to_string(mode.size()) +
                           " steps vs future of " + std::to_string(gt.future.size()));
    }
    KahanSum ade;
    for (std::size_t t = 0; t < mode.size(); ++t) ade.Add((mode[t] - gt.future[t]).Norm());
    best.min_ade = std::min(best.min_ade, ade.value() / static_cast<double>(mode.size()));
    best.min_fde = std::min(best.min_fde, (mode.back() - gt.future.back()).Norm());
  }
  return best;
}

DisplacementSummary DisplacementMetrics(std::span<const PredAgent> preds,
                                        std::span<const AgentGT> gts,
                                        std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                        const Config& config) {
  DisplacementSummary out;
  KahanSum ade, fde;
  for (const auto& [p, g] : pairs) {
    const AgentGT& gt = gts[g];
    if (!gt.complete || gt.future.empty()) continue;
    const AgentDisplacement d = Displacement(preds[p], gt);
    ade.Add(d.min_ade);
    fde.Add(d.min_fde);
    ++out.count;
    if (d.min_fde <= config.epa_threshold) ++out.hits;
  }
  out.ade_sum = ade.value();
  out.fde_sum = fde.value();
  if (out.count > 0) {
    const double n = static_cast<double>(out.count);
    out.min_ade = ade.value() / n;
    out.min_fde = fde.value() / n;
    out.miss_rate = static_cast<double>(out.count - out.hits) / n;
  }
  return out;
}

EpaCounts& EpaCounts::operator+=(const EpaCounts& o) {
  num_gt += o.num_gt;
  num_pred += o.num_pred;
  num_match += o.num_match;
  num_hit += o.num_hit;
  return *this;
}

EpaSceneResult EpaScene(const Scene& gt, const PredictionSet& preds, const Config& config) {
  EpaSceneResult out;
  for (int c : UniqueClasses(gt.dynamic_classes)) {
    std::vector<std::size_t> g_idx, p_idx;
    for (std::size_t j = 0; j < gt.agents.size(); ++j) {
      if (gt.agents[j].class_id == c) g_idx.push_back(j);
    }
    for (std::size_t i = 0; i < preds.agents.size(); ++i) {
      const auto [cls, score] = ArgMax(preds.agents[i].scores);
      if (cls == c && score >= config.pred_score_threshold) p_idx.push_back(i);
    }
    out.counts.num_gt += g_idx.size();
    out.counts.num_pred += p_idx.size();
    Pairs local;  // (local pred, local gt)
    if (config.epa_matching == EpaMatching::kGreedy) {
      std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
      for (std::size_t a = 0; a < g_idx.size(); ++a) {
        for (std::size_t b = 0; b < p_idx.size(); ++b) {
          const double d = (preds.agents[p_idx[b]].center - gt.agents[g_idx[a]].center).Norm();
          if (d <= config.epa_threshold) cands.emplace_back(d, a, b);
        }
      }
      for (const auto& [a, b] : GreedyResolve(std::move(cands))) local.emplace_back(b, a);
    } else {
      CostMatrix cost(p_idx.size(), g_idx.size(), kForbiddenCost);
      for (std::size_t b = 0; b < p_idx.size(); ++b) {
        for (std::size_t a = 0; a < g_idx.size(); ++a) {
          const double d = (preds.agents[p_idx[b]].center - gt.agents[g_idx[a]].center).Norm();
          if (d <= config.epa_threshold) cost(b, a) = d;
        }
      }
      for (const auto& [b, a] : Hungarian(cost).pairs) {
        if (cost(b, a) < kForbiddenCost) local.emplace_back(b, a);
      }
    }
    for (const auto& [b, a] : local) {
      const std::size_t pi = p_idx[b], gi = g_idx[a];
      out.matches.emplace_back(pi, gi);
      ++out.counts.num_match;
      const AgentGT& agent = gt.agents[gi];
      if (agent.complete && !agent.future.empty() &&
          Displacement(preds.agents[pi], agent).min_fde <= config.epa_threshold) {
        ++out.counts.num_hit;
      }
    }
  }
  std::sort(out.matches.begin(), out.matches.end());
  return out;
}

std::optional<double> EpaFromCounts(const EpaCounts& c, double alpha) {
  if (c.num_gt == 0) return std::nullopt;
  return (static_cast<double>(c.num_hit) - alpha * static_cast<double>(c.num_fp())) /
         static_cast<double>(c.num_gt);
}

double ChamferDistance(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) return kInf;
  return 0.5 * (NearestPointMean(a, b) + NearestPointMean(b, a));
}

double InterpolatedAp(const std::vector<bool>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  std::vector<std::size_t> tp_at(ranked_tp.size());
  std::vector<double> precision(ranked_tp.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked_tp.size(); ++k) {
    if (ranked_tp[k]) ++tp;
    tp_at[k] = tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  // Interpolated precision: best precision at any rank whose recall reaches
  // i / 100. Recall is compared in integers, tp * 100 >= i * num_gt.
  std::vector<double> best_from(ranked_tp.size() + 1, 0.0);
  for (std::size_t k = ranked_tp.size(); k-- > 0;) {
    best_from[k] = std::max(best_from[k + 1], precision[k]);
  }
  KahanSum sum;
  std::size_t k = 0;
  for (std::size_t i = 0; i <= 100; ++i) {
    while (k < ranked_tp.size() && tp_at[k] * 100 < i * num_gt) ++k;
    sum.Add(k < ranked_tp.size() ? best_from[k] : 0.0);
  }
  return sum.value() / 101.0;
}

std::optional<double> ChamferMapAp(std::span<const Scene> scenes,
                                   std::span<const PredictionSet> preds, int class_id,
                                   double threshold) {
  std::size_t num_gt = 0;
  for (const Scene& s : scenes) {
    for (const auto& m : s.map_instances) num_gt += m.class_id == class_id;
  }
  if (num_gt == 0) return std::nullopt;
  std::vector<Ranked> ranked;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    for (std::size_t i = 0; i < preds[s].map.size(); ++i) {
      const auto [cls, score] = ArgMax(preds[s].map[i].scores);
      if (cls == class_id) ranked.push_back({score, s, i});
    }
  }
  SortRanked(ranked);
  std::vector<std::vector<bool>> claimed(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    claimed[s].assign(scenes[s].map_instances.size(), false);
  }
  std::vector<bool> tp;
  for (const Ranked& r : ranked) {
    if (r.scene >= scenes.size()) {
      tp.push_back(false);
      continue;
    }
    const auto& gts = scenes[r.scene].map_instances;
    double best = kInf;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gts[j].class_id != class_id || claimed[r.scene][j]) continue;
      const double d = ChamferDistance(preds[r.scene].map[r.index].points, gts[j].points);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    const bool hit = best <= threshold;
    if (hit) claimed[r.scene][best_j] = true;
    tp.push_back(hit);
  }
  return InterpolatedAp(tp, num_gt);
}

ApSummary ChamferMapApAll(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                          double threshold) {
  ApSummary out;
  for (int c = 0; c < kNumMapClasses; ++c) {
    if (auto ap = ChamferMapAp(scenes, preds, c, threshold)) out.per_class[c] = *ap;
  }
  out.mean = MeanOf(out.per_class);
  return out;
}

std::optional<double> DetApClass(std::span<const Scene> scenes,
                                 std::span<const PredictionSet> preds, int class_id,
                                 double threshold) {
  std::size_t num_gt = 0;
  for (const Scene& s : scenes) {
    for (const auto& a : s.agents) num_gt += a.class_id == class_id;
  }
  if (num_gt == 0) return std::nullopt;
  std::vector<Ranked> ranked;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    for (std::size_t i = 0; i < preds[s].agents.size(); ++i) {
      const auto [cls, score] = ArgMax(preds[s].agents[i].scores);
      if (cls == class_id) ranked.push_back({score, s, i});
    }
  }
  SortRanked(ranked);
  std::vector<std::vector<bool>> claimed(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) claimed[s].assign(scenes[s].agents.size(), false);
  std::vector<bool> tp;
  for (const Ranked& r : ranked) {
    if (r.scene >= scenes.size()) {
      tp.push_back(false);
      continue;
    }
    const auto& gts = scenes[r.scene].agents;
    double best = kInf;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gts[j].class_id != class_id || claimed[r.scene][j]) continue;
      const double d = (preds[r.scene].agents[r.index].center - gts[j].center).Norm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    const bool hit = best <= threshold;
    if (hit) claimed[r.scene][best_j] = true;
    tp.push_back(hit);
  }
  return InterpolatedAp(tp, num_gt);
}

ApSummary DetAp(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("det_ap: no distance thresholds");
  ApSummary out;
  for (int c = 0; c < kNumAgentClasses; ++c) {
    KahanSum s;
    bool present = false;
    for (double t : thresholds) {
      if (auto ap = DetApClass(scenes, preds, c, t)) {
        s.Add(*ap);
        present = true;
      }
    }
    if (present) out.per_class[c] = s.value() / static_cast<double>(thresholds.size());
  }
  out.mean = MeanOf(out.per_class);
  return out;
}

MetricsReport Evaluate(std::span<const Scene> scenes, std::span<const PredictionSet> preds,
                       const Config& config) {
  const std::size_t n = std::min(scenes.size(), preds.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (scenes[i].scene_id != preds[i].scene_id) {
      throw ValidationError("scene id mismatch at record " + std::to_string(i + 1) +
                            ": scenes have '" + scenes[i].scene_id +
                            "', predictions have '" + preds[i].scene_id + "'");
    }
  }
  if (scenes.size() != preds.size()) {
    const std::string& id =
        scenes.size() > n ? scenes[n].scene_id : preds[n].scene_id;
    throw ValidationError("scene id '" + id + "' has no counterpart (" +
                          std::to_string(scenes.size()) + " scenes vs " +
                          std::to_string(preds.size()) + " prediction sets)");
  }

  MetricsReport report;
  report.tau_epa = config.epa_threshold;
  report.alpha = config.fp_penalty;
  KahanSum ade, fde;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const EpaSceneResult epa = EpaScene(scenes[i], preds[i], config);
    SceneMetrics sm;
    sm.scene_id = scenes[i].scene_id;
    sm.counts = epa.counts;
    sm.epa = EpaFromCounts(epa.counts, config.fp_penalty);
    sm.displacement =
        DisplacementMetrics(preds[i].agents, scenes[i].agents, epa.matches, config);
    report.counts += epa.counts;
    ade.Add(sm.displacement.ade_sum);
    fde.Add(sm.displacement.fde_sum);
    report.num_valid_trajectories += sm.displacement.count;
    hits += sm.displacement.hits;
    report.per_scene.push_back(std::move(sm));
  }
  report.epa = EpaFromCounts(report.counts, config.fp_penalty);
  if (report.num_valid_trajectories > 0) {
    const double c = static_cast<double>(report.num_valid_trajectories);
    report.min_ade = ade.value() / c;
    report.min_fde = fde.value() / c;
    report.miss_rate = static_cast<double>(report.num_valid_trajectories - hits) / c;
  }
  report.map_ap = ChamferMapApAll(scenes, preds, config.chamfer_threshold);
  report.det_ap = DetAp(scenes, preds, config.det_ap_thresholds);
  return report;
}

std::string ReportToJson(const MetricsReport& r, int indent) {
  nlohmann::ordered_json j;
  j["epa"] = OptJson(r.epa);
  j["min_ade"] = OptJson(r.min_ade);
  j["min_fde"] = OptJson(r.min_fde);
  j["miss_rate"] = OptJson(r.miss_rate);
  j["map_ap"] = ApJson(r.map_ap, true);
  j["det_ap"] = ApJson(r.det_ap, false);
  nlohmann::ordered_json counts = CountsJson(r.counts);
  counts["num_valid_trajectories"] = r.num_valid_trajectories;
  j["counts"] = counts;
  j["settings"] = {{"tau_epa", r.tau_epa}, {"alpha", r.alpha}, {"aggregation", "micro"}};
  nlohmann::ordered_json scenes = nlohmann::ordered_json::array();
  for (const SceneMetrics& s : r.per_scene) {
    nlohmann::ordered_json sj;
    sj["scene_id"] = s.scene_id;
    sj["epa"] = OptJson(s.epa);
    sj["min_ade"] = OptJson(s.displacement.min_ade);
    sj["min_fde"] = OptJson(s.displacement.min_fde);
    sj["miss_rate"] = OptJson(s.displacement.miss_rate);
    sj["counts"] = CountsJson(s.counts);
    sj["counts"]["num_valid_trajectories"] = s.displacement.count;
    scenes.push_back(std::move(sj));
  }
  j["per_scene"] = std::move(scenes);
  return j.dump(indent);
}

std::string ReportsToCsv(std::span<const std::pair<std::string, MetricsReport>> rows) {
  std::string out =
      "label,epa,min_ade,min_fde,miss_rate,map_map,det_map,num_gt,num_pred,num_match,"
      "num_hit,num_fp,num_valid_trajectories\n";
  for (const auto& [label, r] : rows) {
    out += label + "," + CsvNumber(r.epa) + "," + CsvNumber(r.min_ade) + "," +
           CsvNumber(r.min_fde) + "," + CsvNumber(r.miss_rate) + "," +
           CsvNumber(r.map_ap.mean) + "," + CsvNumber(r.det_ap.mean) + "," +
           std::to_string(r.counts.num_gt) + "," + std::to_string(r.counts.num_pred) + "," +
           std::to_string(r.counts.num_match) + "," + std::to_string(r.counts.num_hit) + "," +
           std::to_string(r.counts.num_fp()) + "," +
           std::to_string(r.num_valid_trajectories) + "\n";
  }
  return out;
}

}  // namespace interact
