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

#include "interact/io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "interact/errors.h"
#include "json.hpp"

namespace interact {
namespace {

using nlohmann::json;

json PointJson(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 PointFrom(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [x, y] point");
  return {j[0].get<double>(), j[1].get<double>()};
}

json PointsJson(const std::vector<Vec2>& pts) {
  json out = json::array();
  for (Vec2 p : pts) out.push_back(PointJson(p));
  return out;
}

std::vector<Vec2> PointsFrom(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array of points");
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (const json& p : j) out.push_back(PointFrom(p));
  return out;
}

const json& Require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

template <typename F>
auto Guard(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json SceneJson(const Scene& s) {
  json maps = json::array();
  for (const MapInstanceGT& m : s.map_instances) {
    maps.push_back({{"class_id", m.class_id}, {"points", PointsJson(m.points)}});
  }
  json agents = json::array();
  for (const AgentGT& a : s.agents) {
    agents.push_back({{"class_id", a.class_id},
                      {"center", PointJson(a.center)},
                      {"size", PointJson(a.size)},
                      {"yaw", a.yaw},
                      {"future", PointsJson(a.future)},
                      {"complete", a.complete}});
  }
  return {{"scene_id", s.scene_id},
          {"map_instances", maps},
          {"agents", agents},
          {"dynamic_classes", s.dynamic_classes}};
}

Scene SceneFrom(const json& j) {
  Scene s;
  s.scene_id = Require(j, "scene_id").get<std::string>();
  for (const json& m : Require(j, "map_instances")) {
    s.map_instances.push_back(
        {Require(m, "class_id").get<int>(), PointsFrom(Require(m, "points"))});
  }
  for (const json& a : Require(j, "agents")) {
    AgentGT g;
    g.class_id = Require(a, "class_id").get<int>();
    g.center = PointFrom(Require(a, "center"));
    g.size = PointFrom(Require(a, "size"));
    g.yaw = Require(a, "yaw").get<double>();
    g.future = PointsFrom(Require(a, "future"));
    g.complete = Require(a, "complete").get<bool>();
    s.agents.push_back(std::move(g));
  }
  s.dynamic_classes = Require(j, "dynamic_classes").get<std::vector<int>>();
  return s;
}

json PredJson(const PredictionSet& p) {
  json maps = json::array();
  for (const PredMapInstance& m : p.map) {
    maps.push_back({{"scores", m.scores}, {"points", PointsJson(m.points)}});
  }
  json agents = json::array();
  for (const PredAgent& a : p.agents) {
    json modes = json::array();
    for (const auto& mode : a.forecast) modes.push_back(PointsJson(mode));
    agents.push_back({{"scores", a.scores},
                      {"center", PointJson(a.center)},
                      {"size", PointJson(a.size)},
                      {"yaw", a.yaw},
                      {"forecast", modes}});
  }
  return {{"scene_id", p.scene_id}, {"map", maps}, {"agents", agents}};
}

PredictionSet PredFrom(const json& j) {
  PredictionSet p;
  p.scene_id = Require(j, "scene_id").get<std::string>();
  for (const json& m : Require(j, "map")) {
    p.map.push_back({Require(m, "scores").get<std::vector<double>>(),
                     PointsFrom(Require(m, "points"))});
  }
  for (const json& a : Require(j, "agents")) {
    PredAgent g;
    g.scores = Require(a, "scores").get<std::vector<double>>();
    g.center = PointFrom(Require(a, "center"));
    g.size = PointFrom(Require(a, "size"));
    g.yaw = Require(a, "yaw").get<double>();
    for (const json& mode : Require(a, "forecast")) g.forecast.push_back(PointsFrom(mode));
    p.agents.push_back(std::move(g));
  }
  return p;
}

template <typename T, typename F>
std::vector<T> ReadJsonl(const std::string& path, F&& decode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string SceneToJson(const Scene& scene) { return SceneJson(scene).dump(); }

Scene SceneFromJson(std::string_view text) {
  return Guard("scene", [&] { return SceneFrom(json::parse(text)); });
}

std::string PredictionSetToJson(const PredictionSet& preds) {
  return PredJson(preds).dump();
}

PredictionSet PredictionSetFromJson(std::string_view text) {
  return Guard("prediction set", [&] { return PredFrom(json::parse(text)); });
}

std::string ConfigToJson(const Config& c, int indent) {
  json j = {{"N_P", c.num_points},
            {"N_mode", c.num_modes},
            {"T_f", c.horizon},
            {"C", c.channels},
            {"heads", c.heads},
            {"tau", c.score_threshold},
            {"mu", c.distance_threshold},
            {"tau_EPA", c.epa_threshold},
            {"alpha", c.fp_penalty},
            {"lambda", c.loss_weights},
            {"focal_alpha", c.focal_alpha},
            {"focal_gamma", c.focal_gamma},
            {"chamfer_threshold", c.chamfer_threshold},
            {"half_range", c.half_range},
            {"plain_blocks", c.plain_blocks},
            {"pred_score_threshold", c.pred_score_threshold},
            {"det_ap_thresholds", c.det_ap_thresholds},
            {"match_cls_weight", c.match_cls_weight},
            {"match_geom_weight", c.match_geom_weight},
            {"epa_matching",
             c.epa_matching == EpaMatching::kGreedy ? "greedy" : "hungarian"}};
  return j.dump(indent);
}

Config ConfigFromJson(std::string_view text, const Config& base) {
  return Guard("config", [&] {
    const json j = json::parse(text);
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    static const std::set<std::string> known = {
        "N_P", "N_mode", "T_f", "C", "heads", "tau", "mu", "tau_EPA", "alpha",
        "lambda", "focal_alpha", "focal_gamma", "chamfer_threshold", "half_range",
        "plain_blocks", "pred_score_threshold", "det_ap_thresholds",
        "match_cls_weight", "match_geom_weight", "epa_matching", "gen"};
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) throw ParseError("unknown config field '" + key + "'");
    }
    Config c = base;
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) {
        field = it->get<std::remove_reference_t<decltype(field)>>();
      }
    };
    get("N_P", c.num_points);
    get("N_mode", c.num_modes);
    get("T_f", c.horizon);
    get("C", c.channels);
    get("heads", c.heads);
    get("tau", c.score_threshold);
    if (auto it = j.find("mu"); it != j.end()) {
      c.distance_threshold = it->is_null() ? std::numeric_limits<double>::infinity()
                                           : it->get<double>();
    }
    get("tau_EPA", c.epa_threshold);
    get("alpha", c.fp_penalty);
    get("lambda", c.loss_weights);
    get("focal_alpha", c.focal_alpha);
    get("focal_gamma", c.focal_gamma);
    get("chamfer_threshold", c.chamfer_threshold);
    get("half_range", c.half_range);
    get("plain_blocks", c.plain_blocks);
    get("pred_score_threshold", c.pred_score_threshold);
    get("det_ap_thresholds", c.det_ap_thresholds);
    get("match_cls_weight", c.match_cls_weight);
    get("match_geom_weight", c.match_geom_weight);
    if (auto it = j.find("epa_matching"); it != j.end()) {
      const std::string mode = it->get<std::string>();
      if (mode == "greedy") {
        c.epa_matching = EpaMatching::kGreedy;
      } else if (mode == "hungarian") {
        c.epa_matching = EpaMatching::kHungarian;
      } else {
        throw ParseError("epa_matching must be 'greedy' or 'hungarian'");
      }
    }
    return c;
  });
}

std::vector<Scene> ReadScenes(const std::string& path) {
  return ReadJsonl<Scene>(path, [](const std::string& l) { return SceneFromJson(l); });
}

void WriteScenes(const std::string& path, std::span<const Scene> scenes) {
  std::string out;
  for (const Scene& s : scenes) {
    out += SceneToJson(s);
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::vector<PredictionSet> ReadPredictions(const std::string& path) {
  return ReadJsonl<PredictionSet>(
      path, [](const std::string& l) { return PredictionSetFromJson(l); });
}

void WritePredictions(const std::string& path, std::span<const PredictionSet> preds) {
  std::string out;
  for (const PredictionSet& p : preds) {
    out += PredictionSetToJson(p);
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

}  // namespace interact
