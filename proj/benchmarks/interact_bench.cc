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

#include <vector>

#include "benchmark/benchmark.h"
#include "interact/gradcheck_suite.h"
#include "interact/interactor.h"
#include "interact/matching.h"
#include "interact/metrics.h"
#include "interact/params.h"
#include "interact/rng.h"
#include "interact/synthgen.h"
#include "interact/trainer.h"

namespace interact {
namespace {

void BM_Hungarian(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  CounterRng rng(1, 0, 0);
  CostMatrix cost(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) cost(r, c) = rng.Uniform(0, 10);
  }
  for (auto _ : state) benchmark::DoNotOptimize(Hungarian(cost));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_FullForward(benchmark::State& state) {
  const Config config = state.range(0) ? Config{} : Config::Tiny();
  const ModelParams params = ModelParams::Initialize(config, 0);
  GenConfig gen;
  const Scene scene = GenerateScene(gen, config, 0);
  for (auto _ : state) {
    Tape tape;
    BoundParams bound(params, tape);
    const QueryBundle bundle = SynthQueries(scene, bound, gen, config);
    benchmark::DoNotOptimize(FullForward(bundle, bound, config, scene.scene_id));
  }
}
BENCHMARK(BM_FullForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Config config = Config::Tiny();
  const GenConfig gen = ToyGenConfig(0);
  const Scene scene = GenerateScene(gen, config, 0);
  const Scene* batch[] = {&scene};
  const ModelParams params = ModelParams::Initialize(config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeStep(batch, params, config, gen));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
  const Config config;
  GenConfig gen;
  const auto scenes = GenerateScenes(gen, config, static_cast<std::size_t>(state.range(0)));
  std::vector<PredictionSet> preds;
  for (const Scene& s : scenes) preds.push_back(PerturbToPredictions(s, gen, config, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(Evaluate(scenes, preds, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GradCheckSuite(benchmark::State& state) {
  const Config config = Config::Tiny();
  for (auto _ : state) benchmark::DoNotOptimize(RunGradCheckSuite(config));
}
BENCHMARK(BM_GradCheckSuite)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
}  // namespace interact

BENCHMARK_MAIN();
