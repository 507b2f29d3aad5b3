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

#include "cli.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "interact/errors.h"
#include "interact/gradcheck_suite.h"
#include "interact/interactor.h"
#include "interact/io.h"
#include "interact/metrics.h"
#include "interact/params.h"
#include "interact/scene.h"
#include "interact/synthgen.h"
#include "interact/trainer.h"
#include "json.hpp"

#ifndef INTERACT_BUILD_ID
#define INTERACT_BUILD_ID "interact unknown"
#endif

namespace interact::cli {
namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

// Input that parsed but breaks the config's rules; one line per violation.
class ViolationsError : public std::runtime_error {
 public:
  ViolationsError(const std::string& what, std::vector<std::string> lines)
      : std::runtime_error(what), lines_(std::move(lines)) {}
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::vector<std::string> lines_;
};

void RequireValid(const std::vector<Violation>& violations, const std::string& where) {
  if (violations.empty()) return;
  std::vector<std::string> lines;
  for (const Violation& v : violations) lines.push_back(where + ": " + ToString(v));
  throw ViolationsError(where + ": " + std::to_string(violations.size()) + " violation(s)",
                        std::move(lines));
}

struct Settings {
  Config config;
  GenConfig gen;
};

Settings Resolve(const std::string& path, const Config& base, const GenConfig& base_gen) {
  Settings s{base, base_gen};
  if (!path.empty()) {
    const std::string text = ReadFile(path);
    s.config = ConfigFromJson(text, base);
    s.gen = GenConfigFromConfigDocument(text, base_gen);
  }
  RequireValid(Validate(s.config), "config");
  RequireValid(Validate(s.gen), "config.gen");
  return s;
}

ordered_json SettingsJson(const Settings& s) {
  ordered_json j = ordered_json::parse(ConfigToJson(s.config));
  j["gen"] = ordered_json::parse(GenConfigToJson(s.gen));
  return j;
}

std::string Fixed(std::optional<double> v, int digits = 4) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}

std::vector<Scene> LoadScenes(const std::string& path, const Config& config) {
  std::vector<Scene> scenes = ReadScenes(path);
  for (const Scene& s : scenes) RequireValid(Validate(s, config), path + " '" + s.scene_id + "'");
  RequireValid(ValidateUniqueIds(scenes), path);
  return scenes;
}

std::vector<PredictionSet> LoadPredictions(const std::string& path, const Config& config) {
  std::vector<PredictionSet> preds = ReadPredictions(path);
  for (const PredictionSet& p : preds) {
    RequireValid(Validate(p, config), path + " '" + p.scene_id + "'");
  }
  return preds;
}

class Manifest {
 public:
  Manifest(std::string command, ordered_json config, std::uint64_t seed, Clock::time_point t0)
      : t0_(t0) {
    j_["command"] = std::move(command);
    j_["config"] = std::move(config);
    j_["seed"] = seed;
    j_["inputs"] = ordered_json::object();
    j_["outputs"] = ordered_json::object();
  }
  Manifest& Input(const std::string& key, const std::string& path) {
    j_["inputs"][key] = path;
    return *this;
  }
  Manifest& Output(const std::string& key, const std::string& path) {
    j_["outputs"][key] = path;
    return *this;
  }
  Manifest& Extra(const std::string& key, ordered_json value) {
    j_[key] = std::move(value);
    return *this;
  }
  // Written last, next to `primary`.
  void Write(const std::string& primary) {
    j_["build"] = INTERACT_BUILD_ID;
    j_["duration_seconds"] = std::chrono::duration<double>(Clock::now() - t0_).count();
    WriteFileAtomic(primary + ".manifest.json", j_.dump(2) + "\n");
  }

 private:
  ordered_json j_;
  Clock::time_point t0_;
};

std::vector<PredictionSet> InferAll(std::span<const Scene> scenes, const ModelParams& params,
                                    const Settings& s) {
  std::vector<PredictionSet> out;
  out.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    Tape tape;
    BoundParams bound(params, tape);
    const QueryBundle bundle = SynthQueries(scene, bound, s.gen, s.config);
    PredictionSet preds = FullForward(bundle, bound, s.config, scene.scene_id);
    if (!Validate(preds, s.config).empty()) {
      throw NumericalError("infer: non-finite or invalid output for scene '" + scene.scene_id +
                           "'");
    }
    out.push_back(std::move(preds));
  }
  return out;
}

std::string HistoryCsv(const std::vector<LossRecord>& history) {
  std::string csv = LossHistoryCsvHeader();
  for (const LossRecord& r : history) csv += LossRecordCsvRow(r);
  return csv;
}

void PrintReport(const MetricsReport& r, std::ostream& out) {
  out << "EPA " << Fixed(r.epa) << "  minADE " << Fixed(r.min_ade) << " m  minFDE "
      << Fixed(r.min_fde) << " m  MR " << Fixed(r.miss_rate) << "\n"
      << "map AP " << Fixed(r.map_ap.mean) << "  det mAP " << Fixed(r.det_ap.mean) << "\n"
      << "N_GT " << r.counts.num_gt << "  N_pred " << r.counts.num_pred << "  matched "
      << r.counts.num_match << "  hits " << r.counts.num_hit << "  trajectories "
      << r.num_valid_trajectories << "\n";
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  std::size_t num = 0;
};

int RunGen(const GenArgs& a, bool seed_given, Clock::time_point t0, std::ostream& out) {
  Settings s = Resolve(a.config, Config{}, GenConfig{});
  if (seed_given) s.gen.seed = a.seed;
  const std::vector<Scene> scenes = GenerateScenes(s.gen, s.config, a.num);
  WriteScenes(a.out, scenes);
  Manifest(std::string("gen"), SettingsJson(s), s.gen.seed, t0)
      .Output("scenes", a.out)
      .Extra("num", a.num)
      .Write(a.out);
  out << "wrote " << scenes.size() << " scenes to " << a.out << "\n";
  return kExitOk;
}

struct PerturbArgs {
  std::string config, scenes, out;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int RunPerturb(const PerturbArgs& a, bool seed_given, Clock::time_point t0, std::ostream& out) {
  Settings s = Resolve(a.config, Config{}, GenConfig{});
  if (seed_given) s.gen.seed = a.seed;
  const std::vector<Scene> scenes = LoadScenes(a.scenes, s.config);
  std::vector<PredictionSet> preds;
  preds.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    preds.push_back(PerturbToPredictions(scene, s.gen, s.config, a.noise));
  }
  WritePredictions(a.out, preds);
  Manifest("perturb", SettingsJson(s), s.gen.seed, t0)
      .Input("scenes", a.scenes)
      .Output("predictions", a.out)
      .Extra("noise", a.noise)
      .Write(a.out);
  out << "wrote " << preds.size() << " prediction sets to " << a.out << "\n";
  return kExitOk;
}

struct InferArgs {
  std::string config, scenes, params, out;
};

int RunInfer(const InferArgs& a, Clock::time_point t0, std::ostream& out) {
  const Settings s = Resolve(a.config, Config{}, GenConfig{});
  const std::vector<Scene> scenes = LoadScenes(a.scenes, s.config);
  const ModelParams params = ModelParams::FromJson(ReadFile(a.params));
  RequireValid(params.Check(s.config), a.params);
  const std::vector<PredictionSet> preds = InferAll(scenes, params, s);
  WritePredictions(a.out, preds);
  Manifest("infer", SettingsJson(s), s.gen.seed, t0)
      .Input("scenes", a.scenes)
      .Input("params", a.params)
      .Output("predictions", a.out)
      .Write(a.out);
  out << "wrote " << preds.size() << " prediction sets to " << a.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config, scenes, out, log;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

int RunTrain(const TrainArgs& a, Clock::time_point t0, std::ostream& out, std::ostream& err) {
  const Settings s = Resolve(a.config, Config{}, GenConfig{});
  const std::vector<Scene> scenes = LoadScenes(a.scenes, s.config);
  TrainOptions options;
  options.steps = a.steps;
  options.gen = s.gen;
  const TrainResult result =
      TrainToy(scenes, ModelParams::Initialize(s.config, a.seed), s.config, options, nullptr);
  WriteFileAtomic(a.log, HistoryCsv(result.history));
  Manifest manifest("train", SettingsJson(s), a.seed, t0);
  manifest.Input("scenes", a.scenes).Output("log", a.log).Extra("steps", a.steps);
  if (result.failure) {
    manifest.Extra("failure", *result.failure).Write(a.log);
    err << "train: " << *result.failure << "\n";
    return kExitNumerical;
  }
  WriteFileAtomic(a.out, result.params.ToJson());
  manifest.Output("params", a.out).Write(a.out);
  if (!result.history.empty()) {
    out << "total loss " << result.history.front().total << " -> "
        << result.history.back().total << " over " << result.history.size() << " steps\n";
  }
  out << "wrote " << a.out << " and " << a.log << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string config, scenes, preds, report, csv;
  double tau_epa = 0.0;
};

int RunEval(const EvalArgs& a, bool tau_given, Clock::time_point t0, std::ostream& out) {
  Settings s = Resolve(a.config, Config{}, GenConfig{});
  if (tau_given) s.config.epa_threshold = a.tau_epa;
  RequireValid(Validate(s.config), "config");
  const std::vector<Scene> scenes = LoadScenes(a.scenes, s.config);
  const std::vector<PredictionSet> preds = LoadPredictions(a.preds, s.config);
  const MetricsReport report = Evaluate(scenes, preds, s.config);
  WriteFileAtomic(a.report, ReportToJson(report));
  Manifest manifest("eval", SettingsJson(s), s.gen.seed, t0);
  manifest.Input("scenes", a.scenes).Input("predictions", a.preds).Output("report", a.report);
  if (!a.csv.empty()) {
    const std::pair<std::string, MetricsReport> row{
        std::filesystem::path(a.preds).stem().string(), report};
    WriteFileAtomic(a.csv, ReportsToCsv(std::span(&row, 1)));
    manifest.Output("csv", a.csv);
  }
  manifest.Write(a.report);
  PrintReport(report, out);
  return kExitOk;
}

struct GradCheckArgs {
  std::string config, out;
  double eps = 1e-5;
  std::uint64_t seed = 0;
};

int RunGradCheck(const GradCheckArgs& a, Clock::time_point t0, std::ostream& out,
                 std::ostream& err) {
  const Settings s = Resolve(a.config, Config::Tiny(), ToyGenConfig(a.seed));
  const std::vector<BlockResult> results = RunGradCheckSuite(s.config, a.eps, a.seed);
  double worst = 0.0;
  ordered_json blocks = ordered_json::array();
  for (const BlockResult& r : results) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %10.3e  %5zu coords  worst %-28s %.2fs\n",
                  r.block.c_str(), r.check.max_rel_error, r.check.coordinates,
                  r.check.worst.c_str(), r.seconds);
    out << line;
    worst = std::max(worst, r.check.max_rel_error);
    blocks.push_back({{"block", r.block},
                      {"max_rel_error", r.check.max_rel_error},
                      {"coordinates", r.check.coordinates},
                      {"worst", r.check.worst},
                      {"worst_fd", r.check.worst_fd},
                      {"worst_ad", r.check.worst_ad},
                      {"seconds", r.seconds}});
  }
  const bool pass = worst <= kGradCheckTolerance;
  if (!a.out.empty()) {
    ordered_json j = {{"eps", a.eps}, {"tolerance", kGradCheckTolerance},
                      {"max_rel_error", worst}, {"pass", pass}, {"blocks", blocks}};
    WriteFileAtomic(a.out, j.dump(2) + "\n");
    Manifest("gradcheck", SettingsJson(s), a.seed, t0)
        .Output("results", a.out)
        .Extra("eps", a.eps)
        .Write(a.out);
  }
  if (!pass) {
    err << "gradcheck: max relative error " << worst << " exceeds " << kGradCheckTolerance
        << "\n";
    return kExitNumerical;
  }
  out << "gradcheck: all blocks within " << kGradCheckTolerance << "\n";
  return kExitOk;
}

struct DemoArgs {
  std::string config, workdir = "interact_demo";
  std::uint64_t seed = 0;
  std::size_t num = 1;
  std::size_t steps = 2000;
};

int RunDemo(const DemoArgs& a, Clock::time_point t0, std::ostream& out, std::ostream& err) {
  Settings s = Resolve(a.config, Config::Tiny(), ToyGenConfig(a.seed));
  s.gen.seed = a.seed;
  std::filesystem::create_directories(a.workdir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(a.workdir) / name).string();
  };
  const std::string scenes_path = path("scenes.jsonl"), params_path = path("params.json"),
                    log_path = path("loss.csv"), preds_path = path("preds.jsonl"),
                    report_path = path("report.json");

  const std::vector<Scene> scenes = GenerateScenes(s.gen, s.config, a.num);
  WriteScenes(scenes_path, scenes);
  out << "gen: " << scenes.size() << " scene(s)\n";

  TrainOptions options;
  options.steps = a.steps;
  options.gen = s.gen;
  const TrainResult trained =
      TrainToy(scenes, ModelParams::Initialize(s.config, a.seed), s.config, options, nullptr);
  WriteFileAtomic(log_path, HistoryCsv(trained.history));
  if (trained.failure) {
    err << "demo: train: " << *trained.failure << "\n";
    return kExitNumerical;
  }
  WriteFileAtomic(params_path, trained.params.ToJson());
  if (!trained.history.empty()) {
    out << "train: total loss " << trained.history.front().total << " -> "
        << trained.history.back().total << " over " << trained.history.size() << " steps\n";
  }

  const std::vector<PredictionSet> preds = InferAll(scenes, trained.params, s);
  WritePredictions(preds_path, preds);
  out << "infer: " << preds.size() << " prediction set(s)\n";

  const MetricsReport report = Evaluate(scenes, preds, s.config);
  WriteFileAtomic(report_path, ReportToJson(report));
  out << "eval:\n";
  PrintReport(report, out);

  Manifest("demo", SettingsJson(s), a.seed, t0)
      .Output("scenes", scenes_path)
      .Output("params", params_path)
      .Output("log", log_path)
      .Output("predictions", preds_path)
      .Output("report", report_path)
      .Extra("num", a.num)
      .Extra("steps", a.steps)
      .Write(path("demo"));
  return kExitOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  CLI::App app{"Joint perception and motion prediction toolkit on synthetic scenes", "interact"};
  app.require_subcommand(1, 1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic scenes");
  gen_cmd->add_option("--config", gen.config, "Config JSON")->check(CLI::ExistingFile);
  auto* gen_seed = gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--num", gen.num, "Number of scenes")->required();
  gen_cmd->add_option("--out", gen.out, "Output scenes JSONL")->required();

  PerturbArgs perturb;
  auto* perturb_cmd = app.add_subcommand("perturb", "Oracle predictions from noisy ground truth");
  perturb_cmd->add_option("--config", perturb.config, "Config JSON")->check(CLI::ExistingFile);
  perturb_cmd->add_option("--scenes", perturb.scenes, "Scenes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  perturb_cmd->add_option("--noise", perturb.noise, "Noise scale, m")
      ->required()
      ->check(CLI::NonNegativeNumber);
  auto* perturb_seed = perturb_cmd->add_option("--seed", perturb.seed, "Perturbation seed");
  perturb_cmd->add_option("--out", perturb.out, "Output predictions JSONL")->required();

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Run the model over synthesized queries");
  infer_cmd->add_option("--config", infer.config, "Config JSON")->check(CLI::ExistingFile);
  infer_cmd->add_option("--scenes", infer.scenes, "Scenes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--params", infer.params, "Parameters JSON")
      ->required()
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--out", infer.out, "Output predictions JSONL")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the toy model with AdamW");
  train_cmd->add_option("--config", train.config, "Config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--scenes", train.scenes, "Scenes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--steps", train.steps, "Optimizer steps")->required();
  train_cmd->add_option("--seed", train.seed, "Parameter initialization seed");
  train_cmd->add_option("--out", train.out, "Output parameters JSON")->required();
  train_cmd->add_option("--log", train.log, "Loss history CSV")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--config", eval.config, "Config JSON")->check(CLI::ExistingFile);
  eval_cmd->add_option("--scenes", eval.scenes, "Scenes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--preds", eval.preds, "Predictions JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  auto* eval_tau = eval_cmd->add_option("--tau-epa", eval.tau_epa, "EPA hit threshold, m");
  eval_cmd->add_option("--report", eval.report, "Output report JSON")->required();
  eval_cmd->add_option("--csv", eval.csv, "Output summary CSV");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gc_cmd->add_option("--config", gc.config, "Config JSON (default: tiny)")
      ->check(CLI::ExistingFile);
  gc_cmd->add_option("--eps", gc.eps, "Central-difference step")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--seed", gc.seed, "Probe scene and parameter seed");
  gc_cmd->add_option("--out", gc.out, "Output results JSON");

  DemoArgs demo;
  auto* demo_cmd = app.add_subcommand("demo", "gen, train, infer and eval on the tiny config");
  demo_cmd->add_option("--config", demo.config, "Config JSON (default: tiny)")
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--seed", demo.seed, "Seed for scenes and parameters");
  demo_cmd->add_option("--workdir", demo.workdir, "Directory for all outputs");
  demo_cmd->add_option("--num", demo.num, "Number of scenes")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--steps", demo.steps, "Training steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return RunGen(gen, gen_seed->count() > 0, t0, out);
    if (*perturb_cmd) return RunPerturb(perturb, perturb_seed->count() > 0, t0, out);
    if (*infer_cmd) return RunInfer(infer, t0, out);
    if (*train_cmd) return RunTrain(train, t0, out, err);
    if (*eval_cmd) return RunEval(eval, eval_tau->count() > 0, t0, out);
    if (*gc_cmd) return RunGradCheck(gc, t0, out, err);
    if (*demo_cmd) return RunDemo(demo, t0, out, err);
  } catch (const ViolationsError& e) {
    err << "validation failed: " << e.what() << "\n";
    for (const std::string& line : e.lines()) err << "  " << line << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    err << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GenerationError& e) {
    err << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace interact::cli
