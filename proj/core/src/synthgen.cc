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

#include "interact/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>

#include "interact/errors.h"
#include "interact/ops.h"
#include "interact/rng.h"
#include "json.hpp"

namespace interact {
namespace {

using nlohmann::json;

// RNG streams. Lane and agent streams are offset by their index.
constexpr std::uint64_t kLaneStream = 1000;
constexpr std::uint64_t kAgentStream = 2000;
constexpr std::uint64_t kCrossingStream = 3000;
constexpr std::uint64_t kPerturbMapStream = 10;
constexpr std::uint64_t kPerturbAgentStream = 11;
constexpr std::uint64_t kPerturbFpStream = 12;
constexpr std::uint64_t kFeatureStream = 20;

constexpr double kLaneDs = 0.5;       // dense sampling step, m
constexpr double kRangeMargin = 4.0;  // lanes stay this far inside the square
constexpr double kLaneHalfWidth = 1.75;
constexpr double kMinLaneLength = 20.0;
constexpr int kMaxAttempts = 200;

struct Curve {
  std::vector<Vec2> points;
  std::vector<double> headings;

  double Length() const { return kLaneDs * static_cast<double>(points.size() - 1); }

  // Position and heading at arc length s, extrapolating straight past the end.
  std::pair<Vec2, double> At(double s) const {
    if (s <= 0.0) return {points.front(), headings.front()};
    const double len = Length();
    if (s >= len) {
      const double h = headings.back();
      const double extra = s - len;
      return {points.back() + Vec2{extra * std::cos(h), extra * std::sin(h)}, h};
    }
    const double f = s / kLaneDs;
    const std::size_t i = std::min(static_cast<std::size_t>(f), points.size() - 2);
    const double t = f - static_cast<double>(i);
    return {points[i] + t * (points[i + 1] - points[i]), headings[i]};
  }

  std::vector<Vec2> Offset(double d) const {
    std::vector<Vec2> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double h = headings[i];
      out.push_back(points[i] + d * Vec2{-std::sin(h), std::cos(h)});
    }
    return out;
  }
};

bool Inside(Vec2 p, double r) { return std::abs(p.x) <= r && std::abs(p.y) <= r; }

// Distance along heading h from p (inside the square) to its edge.
double ExitDistance(Vec2 p, double h, double r) {
  const double c = std::cos(h), sn = std::sin(h);
  double t = std::numeric_limits<double>::infinity();
  if (std::abs(c) > 1e-12) t = std::min(t, ((c > 0 ? r : -r) - p.x) / c);
  if (std::abs(sn) > 1e-12) t = std::min(t, ((sn > 0 ? r : -r) - p.y) / sn);
  return t;
}

LaneFamily PickFamily(LaneFamily f, CounterRng& rng) {
  if (f != LaneFamily::kMixed) return f;
  static constexpr LaneFamily kAll[] = {LaneFamily::kStraight, LaneFamily::kArc,
                                        LaneFamily::kSCurve};
  return kAll[rng.Index(3)];
}

Curve SampleLane(const GenConfig& gen, double r, std::size_t scene, std::size_t lane) {
  const double inner = r - kRangeMargin;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    CounterRng rng(gen.seed, scene, kLaneStream + lane * 7919 + attempt);
    const LaneFamily family = PickFamily(gen.family, rng);
    const double length = rng.Uniform(30.0, 70.0);
    const Vec2 start{rng.Uniform(-0.8 * inner, 0.8 * inner),
                     rng.Uniform(-0.8 * inner, 0.8 * inner)};
    double heading = rng.Uniform(0.0, 2.0 * std::numbers::pi);
    const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
    const double kappa0 = sign * rng.Uniform(0.01, 0.04);
    Curve c;
    c.points.push_back(start);
    const std::size_t steps = static_cast<std::size_t>(length / kLaneDs);
    for (std::size_t k = 0; k < steps; ++k) {
      const double s = kLaneDs * static_cast<double>(k);
      double kappa = 0.0;
      if (family == LaneFamily::kArc) kappa = kappa0;
      if (family == LaneFamily::kSCurve) kappa = kappa0 * std::sin(2.0 * std::numbers::pi * s / length);
      c.headings.push_back(heading);
      const Vec2 next = c.points.back() + kLaneDs * Vec2{std::cos(heading), std::sin(heading)};
      if (!Inside(next, inner)) break;
      c.points.push_back(next);
      heading += kappa * kLaneDs;
    }
    c.headings.resize(c.points.size(), heading);
    if (c.points.size() >= 2 && c.Length() >= std::min(kMinLaneLength, length)) return c;
  }
  throw GenerationError("could not place lane " + std::to_string(lane) + " inside a " +
                        std::to_string(2.0 * r) + " m square");
}

// Uniform arc-length resampling to exactly n points.
std::vector<Vec2> Resample(const std::vector<Vec2>& dense, std::size_t n) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < dense.size(); ++i) {
    cum.push_back(cum.back() + (dense[i] - dense[i - 1]).Norm());
  }
  std::vector<Vec2> out;
  out.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = n == 1 ? 0.0 : cum.back() * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < dense.size() && cum[seg + 1] < s) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double t = span > 0.0 ? std::clamp((s - cum[seg]) / span, 0.0, 1.0) : 0.0;
    out.push_back(SnapToGrid(dense[seg] + t * (dense[seg + 1] - dense[seg])));
  }
  return out;
}

std::vector<double> SampleScores(CounterRng& rng, int num_classes, int true_class,
                                 const GenConfig& gen) {
  // Fixed draw count per call keeps streams aligned across noise levels.
  const double eps = rng.Uniform(0.0, gen.score_eps);
  const bool corrupt = rng.Uniform() < gen.score_corruption;
  const std::size_t shift = 1 + rng.Index(static_cast<std::size_t>(num_classes - 1));
  std::vector<double> s(num_classes);
  for (double& v : s) v = rng.Uniform(0.0, gen.score_eps);
  const int top = corrupt ? static_cast<int>((true_class + shift) % num_classes) : true_class;
  s[top] = 1.0 - eps;
  return s;
}

Vec2 AgentSize(int class_id) {
  switch (class_id) {
    case kCar: return {4.5, 1.9};
    case kPedestrian: return {0.7, 0.7};
    case kTrafficCone: return {0.4, 0.4};
    default: return {2.0, 0.5};
  }
}

double GtSpeed(const AgentGT& a) {
  if (a.future.empty()) return 0.0;
  return (a.future.front() - a.center).Norm() / kStepSeconds;
}

// GT offsets padded to the horizon by repeating the last offset.
std::vector<Vec2> BaseOffsets(const AgentGT& a, std::size_t horizon) {
  std::vector<Vec2> off = EncodeTrajectory(a.future, a.center);
  const Vec2 last = off.empty() ? Vec2{} : off.back();
  off.resize(horizon, last);
  return off;
}

template <typename T>
void ReadField(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

GenConfig GenFromJsonObject(const json& j, const GenConfig& base) {
  if (!j.is_object()) throw ParseError("gen config must be a JSON object");
  static const std::set<std::string> known = {
      "seed", "lanes", "family", "agents", "speed_min", "speed_max", "static_fraction", "exit_fraction",
      "crossing_prob", "map_noise", "center_noise", "traj_noise", "score_corruption",
      "score_eps", "mode_jitter", "fp_agents", "fp_map", "drop_prob", "query_noise",
      "feature_noise"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParseError("unknown gen field '" + key + "'");
  }
  GenConfig g = base;
  ReadField(j, "seed", g.seed);
  ReadField(j, "lanes", g.lanes);
  if (auto it = j.find("family"); it != j.end()) {
    const std::string f = it->get<std::string>();
    if (f == "straight") {
      g.family = LaneFamily::kStraight;
    } else if (f == "arc") {
      g.family = LaneFamily::kArc;
    } else if (f == "s_curve") {
      g.family = LaneFamily::kSCurve;
    } else if (f == "mixed") {
      g.family = LaneFamily::kMixed;
    } else {
      throw ParseError("family must be straight, arc, s_curve or mixed");
    }
  }
  ReadField(j, "agents", g.agents);
  ReadField(j, "speed_min", g.speed_min);
  ReadField(j, "speed_max", g.speed_max);
  ReadField(j, "static_fraction", g.static_fraction);
  ReadField(j, "exit_fraction", g.exit_fraction);
  ReadField(j, "crossing_prob", g.crossing_prob);
  ReadField(j, "map_noise", g.map_noise);
  ReadField(j, "center_noise", g.center_noise);
  ReadField(j, "traj_noise", g.traj_noise);
  ReadField(j, "score_corruption", g.score_corruption);
  ReadField(j, "score_eps", g.score_eps);
  ReadField(j, "mode_jitter", g.mode_jitter);
  ReadField(j, "fp_agents", g.fp_agents);
  ReadField(j, "fp_map", g.fp_map);
  ReadField(j, "drop_prob", g.drop_prob);
  ReadField(j, "query_noise", g.query_noise);
  ReadField(j, "feature_noise", g.feature_noise);
  return g;
}

template <typename F>
GenConfig ParseGuard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string("gen config: ") + e.what());
  }
}

}  // namespace

GenConfig ToyGenConfig(std::uint64_t seed) {
  GenConfig g;
  g.seed = seed;
  g.lanes = 2;
  g.crossing_prob = 0.0;
  g.agents = 3;
  g.static_fraction = 0.0;
  g.exit_fraction = 0.0;
  return g;
}

std::string_view LaneFamilyName(LaneFamily f) {
  switch (f) {
    case LaneFamily::kStraight: return "straight";
    case LaneFamily::kArc: return "arc";
    case LaneFamily::kSCurve: return "s_curve";
    case LaneFamily::kMixed: return "mixed";
  }
  return "mixed";
}

std::string GenConfigToJson(const GenConfig& g, int indent) {
  nlohmann::ordered_json j;
  j["seed"] = g.seed;
  j["lanes"] = g.lanes;
  j["family"] = std::string(LaneFamilyName(g.family));
  j["agents"] = g.agents;
  j["speed_min"] = g.speed_min;
  j["speed_max"] = g.speed_max;
  j["static_fraction"] = g.static_fraction;
  j["exit_fraction"] = g.exit_fraction;
  j["crossing_prob"] = g.crossing_prob;
  j["map_noise"] = g.map_noise;
  j["center_noise"] = g.center_noise;
  j["traj_noise"] = g.traj_noise;
  j["score_corruption"] = g.score_corruption;
  j["score_eps"] = g.score_eps;
  j["mode_jitter"] = g.mode_jitter;
  j["fp_agents"] = g.fp_agents;
  j["fp_map"] = g.fp_map;
  j["drop_prob"] = g.drop_prob;
  j["query_noise"] = g.query_noise;
  j["feature_noise"] = g.feature_noise;
  return j.dump(indent);
}

GenConfig GenConfigFromJson(std::string_view text, const GenConfig& base) {
  return ParseGuard([&] { return GenFromJsonObject(json::parse(text), base); });
}

GenConfig GenConfigFromConfigDocument(std::string_view text, const GenConfig& base) {
  return ParseGuard([&] {
    const json j = json::parse(text);
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    auto it = j.find("gen");
    return it == j.end() ? base : GenFromJsonObject(*it, base);
  });
}

std::vector<Violation> Validate(const GenConfig& g) {
  std::vector<Violation> out;
  auto nonneg = [&](const char* name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back({name, 0, "must be finite and >= 0"});
  };
  auto prob = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back({name, 0, "must lie in [0, 1]"});
  };
  nonneg("speed_min", g.speed_min);
  nonneg("speed_max", g.speed_max);
  if (g.speed_max < g.speed_min) out.push_back({"speed_max", 0, "below speed_min"});
  prob("static_fraction", g.static_fraction);
  prob("exit_fraction", g.exit_fraction);
  prob("crossing_prob", g.crossing_prob);
  nonneg("map_noise", g.map_noise);
  nonneg("center_noise", g.center_noise);
  nonneg("traj_noise", g.traj_noise);
  prob("score_corruption", g.score_corruption);
  if (!(g.score_eps >= 0.0 && g.score_eps < 0.5)) {
    out.push_back({"score_eps", 0, "must lie in [0, 0.5)"});
  }
  nonneg("mode_jitter", g.mode_jitter);
  prob("drop_prob", g.drop_prob);
  nonneg("query_noise", g.query_noise);
  nonneg("feature_noise", g.feature_noise);
  return out;
}

double SnapToGrid(double v) { return std::nearbyint(v / kCoordinateGrid) * kCoordinateGrid; }
Vec2 SnapToGrid(Vec2 v) { return {SnapToGrid(v.x), SnapToGrid(v.y)}; }

Scene GenerateScene(const GenConfig& gen, const Config& config, std::size_t scene_index) {
  if (auto v = Validate(gen); !v.empty()) {
    throw GenerationError("gen config: " + ToString(v.front()));
  }
  if (gen.lanes == 0 && gen.agents > 0) {
    throw GenerationError("cannot place " + std::to_string(gen.agents) +
                          " agents without lanes");
  }
  if (config.num_points < 2 || config.horizon == 0) {
    throw GenerationError("need at least 2 points per instance and 1 future step");
  }
  const double r = config.half_range;
  if (!(r > kRangeMargin + 1.0)) throw GenerationError("perception range too small for lanes");

  Scene scene;
  char id[64];
  std::snprintf(id, sizeof(id), "s%llu-%06zu", static_cast<unsigned long long>(gen.seed),
                scene_index);
  scene.scene_id = id;

  std::vector<Curve> lanes;
  for (std::size_t l = 0; l < gen.lanes; ++l) {
    lanes.push_back(SampleLane(gen, r, scene_index, l));
    const Curve& c = lanes.back();
    scene.map_instances.push_back({kDivider, Resample(c.Offset(kLaneHalfWidth), config.num_points)});
    scene.map_instances.push_back(
        {kBoundary, Resample(c.Offset(-kLaneHalfWidth - 0.25), config.num_points)});
    CounterRng rng(gen.seed, scene_index, kCrossingStream + l);
    if (rng.Bernoulli(gen.crossing_prob)) {
      const auto [p, h] = c.At(rng.Uniform(0.2, 0.8) * c.Length());
      const Vec2 n{-std::sin(h), std::cos(h)};
      std::vector<Vec2> dense;
      for (int k = -8; k <= 8; ++k) dense.push_back(p + (0.5 * k) * n);
      scene.map_instances.push_back({kCrossing, Resample(dense, config.num_points)});
    }
  }

  const std::size_t horizon = config.horizon;
  for (std::size_t a = 0; a < gen.agents; ++a) {
    CounterRng rng(gen.seed, scene_index, kAgentStream + a);
    const Curve& lane = lanes[rng.Index(lanes.size())];
    const bool is_static = rng.Bernoulli(gen.static_fraction);
    const bool is_ped = rng.Bernoulli(0.25);
    const double u = rng.Uniform(0.0, 1.0);
    const double speed = rng.Uniform(gen.speed_min, gen.speed_max);
    const bool cone = rng.Bernoulli(0.5);
    const bool exits = rng.Bernoulli(gen.exit_fraction);
    const double len = lane.Length();
    const double s_static = 0.7 * u * len;

    AgentGT agent;
    if (is_static) {
      agent.class_id = cone ? kTrafficCone : kBarrier;
      const auto [p, h] = lane.At(s_static);
      agent.center = SnapToGrid(p + (kLaneHalfWidth + 1.0) * Vec2{-std::sin(h), std::cos(h)});
      agent.yaw = h;
      agent.future.assign(horizon, agent.center);
    } else {
      agent.class_id = is_ped ? kPedestrian : kCar;
      const double duration = kStepSeconds * static_cast<double>(horizon);
      double v = is_ped ? 0.25 * speed : speed;
      double s0 = 0.0;
      if (exits) {
        // From the second half of the lane, fast enough to run off its end
        // and out of the square before the horizon.
        s0 = (0.5 + 0.5 * u) * len;
        const double needed =
            (len - s0) + ExitDistance(lane.points.back(), lane.headings.back(), r) + 1.0;
        v = std::max(v, needed / duration);
      } else {
        // The whole future stays on the lane, hence inside the square.
        v = std::min(v, len / duration);
        s0 = u * (len - v * duration);
      }
      const auto [p, h] = lane.At(s0);
      agent.center = SnapToGrid(p);
      agent.yaw = h;
      for (std::size_t t = 1; t <= horizon; ++t) {
        const Vec2 q = SnapToGrid(lane.At(s0 + v * kStepSeconds * static_cast<double>(t)).first);
        if (!Inside(q, r)) {
          agent.complete = false;
          break;
        }
        agent.future.push_back(q);
      }
    }
    agent.size = AgentSize(agent.class_id);
    scene.agents.push_back(std::move(agent));
  }
  return scene;
}

std::vector<Scene> GenerateScenes(const GenConfig& gen, const Config& config,
                                  std::size_t count) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(GenerateScene(gen, config, i));
  return out;
}

std::uint64_t SceneKey(std::string_view scene_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scene_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PredictionSet PerturbToPredictions(const Scene& scene, const GenConfig& gen,
                                   const Config& config, double noise) {
  if (!(noise >= 0.0)) throw ConfigError("noise level must be >= 0");
  const std::uint64_t key = SceneKey(scene.scene_id);
  PredictionSet out;
  out.scene_id = scene.scene_id;

  CounterRng map_rng(gen.seed, key, kPerturbMapStream);
  for (const MapInstanceGT& m : scene.map_instances) {
    const bool drop = map_rng.Uniform() < gen.drop_prob;
    PredMapInstance p;
    p.scores = SampleScores(map_rng, kNumMapClasses, m.class_id, gen);
    const double sd = noise * gen.map_noise;
    for (Vec2 q : m.points) {
      const double dx = map_rng.Normal(), dy = map_rng.Normal();
      p.points.push_back(SnapToGrid(q + Vec2{sd * dx, sd * dy}));
    }
    if (!drop) out.map.push_back(std::move(p));
  }

  const std::size_t horizon = config.horizon, modes = config.num_modes;
  CounterRng agent_rng(gen.seed, key, kPerturbAgentStream);
  for (const AgentGT& a : scene.agents) {
    const bool drop = agent_rng.Uniform() < gen.drop_prob;
    PredAgent p;
    p.scores = SampleScores(agent_rng, kNumAgentClasses, a.class_id, gen);
    const double cx = agent_rng.Normal(), cy = agent_rng.Normal();
    p.center = SnapToGrid(a.center + noise * gen.center_noise * Vec2{cx, cy});
    p.size = a.size;
    p.yaw = a.yaw + noise * 0.05 * agent_rng.Normal();
    // Noise on absolute positions, re-encoded as offsets.
    const std::vector<Vec2> base = DecodeTrajectory(BaseOffsets(a, horizon), a.center);
    std::vector<Vec2> noisy;
    const double sd = noise * gen.traj_noise;
    for (const Vec2& q : base) {
      const double dx = agent_rng.Normal(), dy = agent_rng.Normal();
      noisy.push_back(q + Vec2{sd * dx, sd * dy});
    }
    std::vector<Vec2> offsets = EncodeTrajectory(noisy, a.center);
    for (Vec2& o : offsets) o = SnapToGrid(o);
    p.forecast.push_back(offsets);
    for (std::size_t k = 1; k < modes; ++k) {
      std::vector<Vec2> m = offsets;
      for (Vec2& o : m) {
        const double dx = agent_rng.Normal(), dy = agent_rng.Normal();
        o = SnapToGrid(o + gen.mode_jitter * Vec2{dx, dy});
      }
      p.forecast.push_back(std::move(m));
    }
    if (!drop) out.agents.push_back(std::move(p));
  }

  CounterRng fp_rng(gen.seed, key, kPerturbFpStream);
  const double r = config.half_range;
  const double clearance = std::max(2.0 * config.epa_threshold, 5.0);
  for (std::size_t f = 0; f < gen.fp_agents; ++f) {
    Vec2 c;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      c = SnapToGrid(Vec2{fp_rng.Uniform(-0.9 * r, 0.9 * r), fp_rng.Uniform(-0.9 * r, 0.9 * r)});
      bool clear = true;
      for (const AgentGT& a : scene.agents) clear = clear && (a.center - c).Norm() > clearance;
      for (const PredAgent& a : out.agents) clear = clear && (a.center - c).Norm() > clearance;
      if (clear) break;
    }
    PredAgent p;
    p.scores.assign(kNumAgentClasses, 0.0);
    p.scores[kCar] = fp_rng.Uniform(0.6, 0.9);
    p.center = c;
    p.size = AgentSize(kCar);
    p.forecast.assign(modes, std::vector<Vec2>(horizon));
    out.agents.push_back(std::move(p));
  }
  for (std::size_t f = 0; f < gen.fp_map; ++f) {
    const Vec2 start{fp_rng.Uniform(-0.8 * r, 0.8 * r), fp_rng.Uniform(-0.8 * r, 0.8 * r)};
    const double h = fp_rng.Uniform(0.0, 2.0 * std::numbers::pi);
    const std::vector<Vec2> dense = {start, start + 10.0 * Vec2{std::cos(h), std::sin(h)}};
    PredMapInstance p;
    p.scores.assign(kNumMapClasses, 0.0);
    p.scores[fp_rng.Index(kNumMapClasses)] = fp_rng.Uniform(0.6, 0.9);
    p.points = Resample(dense, config.num_points);
    out.map.push_back(std::move(p));
  }
  return out;
}

QueryBundle SynthQueries(const Scene& scene, const BoundParams& params, const GenConfig& gen,
                         const Config& config) {
  Tape& tape = params.tape();
  GenConfig clean = gen;
  clean.drop_prob = 0.0;
  clean.fp_agents = 0;
  clean.fp_map = 0;
  const PredictionSet geom = PerturbToPredictions(scene, clean, config, gen.query_noise);
  const double r = config.half_range;
  const std::size_t c = config.channels;
  const std::size_t na = scene.agents.size();
  const std::size_t ni = scene.map_instances.size();
  const std::size_t np = config.num_points;
  CounterRng feat_rng(gen.seed, SceneKey(scene.scene_id), kFeatureStream);
  auto noise_tensor = [&](Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = gen.feature_noise * feat_rng.Normal();
    return t;
  };

  QueryBundle b;
  std::vector<std::size_t> agent_classes;
  Tensor pose({na, 5});
  for (std::size_t i = 0; i < na; ++i) {
    const AgentGT& a = scene.agents[i];
    const PredAgent& p = geom.agents[i];
    agent_classes.push_back(static_cast<std::size_t>(a.class_id));
    b.agent_positions.push_back(p.center);
    pose.at(i, 0) = p.center.x / r;
    pose.at(i, 1) = p.center.y / r;
    pose.at(i, 2) = std::cos(p.yaw);
    pose.at(i, 3) = std::sin(p.yaw);
    pose.at(i, 4) = GtSpeed(a) / 10.0;
  }
  b.agent_queries = Add(GatherRows(params["embed.agent_class"], agent_classes),
                        Mlp(tape.Constant(std::move(pose)), params.Mlp("embed.agent_pose")));
  if (gen.feature_noise > 0.0) {
    b.agent_queries = Add(b.agent_queries, tape.Constant(noise_tensor({na, c})));
  }

  std::vector<std::size_t> point_classes;
  Tensor coords({ni * np, 2});
  for (std::size_t i = 0; i < ni; ++i) {
    const PredMapInstance& m = geom.map[i];
    b.map_points.push_back(m.points);
    b.map_scores.push_back(m.scores);
    for (std::size_t k = 0; k < np; ++k) {
      point_classes.push_back(static_cast<std::size_t>(scene.map_instances[i].class_id));
      coords.at(i * np + k, 0) = m.points[k].x / r;
      coords.at(i * np + k, 1) = m.points[k].y / r;
    }
  }
  Var map_q = Add(GatherRows(params["embed.map_class"], point_classes),
                  Mlp(tape.Constant(std::move(coords)), params.Mlp("embed.map_point")));
  if (gen.feature_noise > 0.0) map_q = Add(map_q, tape.Constant(noise_tensor({ni * np, c})));
  b.map_queries = Reshape(map_q, {ni, np, c});
  return b;
}

}  // namespace interact
