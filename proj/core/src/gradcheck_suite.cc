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

#include "interact/gradcheck_suite.h"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "interact/errors.h"
#include "interact/interactor.h"
#include "interact/losses.h"
#include "interact/ops.h"
#include "interact/params.h"
#include "interact/rng.h"

namespace interact {
namespace {

Tensor RandomTensor(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.Uniform(lo, hi);
  return t;
}

// Scalar probe of a non-scalar output: sum(out * w) for a fixed random w.
Var Project(Var out, const Tensor& w) { return Sum(Mul(out, out.tape()->Constant(w))); }

std::vector<std::string> NamesWithPrefix(const ModelParams& params,
                                         std::initializer_list<std::string_view> prefixes) {
  std::vector<std::string> out;
  for (const auto& [name, _] : params.tensors()) {
    for (std::string_view p : prefixes) {
      if (std::string_view(name).starts_with(p)) {
        out.push_back(name);
        break;
      }
    }
  }
  return out;
}

using ParamLoss =
    std::function<Var(Tape& tape, const BoundParams& bound, std::span<const Var> extra)>;

// Probes the listed parameters plus `extra` inputs.
GradCheckResult CheckWithParams(const ModelParams& params,
                                const std::vector<std::string>& names,
                                const std::vector<std::pair<std::string, Tensor>>& extra,
                                const ParamLoss& fn, double eps) {
  std::vector<Tensor> inputs;
  std::vector<std::string> labels;
  for (const std::string& n : names) {
    inputs.push_back(params.at(n));
    labels.push_back(n);
  }
  for (const auto& [label, t] : extra) {
    inputs.push_back(t);
    labels.push_back(label);
  }
  const std::size_t np = names.size();
  LossBuilder builder = [&](Tape& tape, std::span<const Var> leaves) {
    std::map<std::string, Var> overrides;
    for (std::size_t i = 0; i < np; ++i) overrides.emplace(names[i], leaves[i]);
    BoundParams bound(params, tape, overrides);
    return fn(tape, bound, leaves.subspan(np));
  };
  return FiniteDiffCheck(builder, inputs, eps, labels);
}

// Pre-activations of a ReLU MLP stay this far from zero.
constexpr double kKinkMargin = 1e-3;

bool AwayFromKinks(const Tensor& x, const std::vector<Tensor>& w, const std::vector<Tensor>& b) {
  Tape tape;
  Var h = tape.Constant(x);
  for (std::size_t l = 0; l < w.size(); ++l) {
    h = Linear(h, tape.Constant(w[l]), tape.Constant(b[l]));
    if (l + 1 == w.size()) break;
    for (double z : h.value().values()) {
      if (std::abs(z) < kKinkMargin) return false;
    }
    h = Relu(h);
  }
  return true;
}

bool PoolGapsClear(const Tensor& x) {
  // x is [A x B x C]; max over B must beat the runner-up by the margin.
  const std::size_t a = x.dim(0), b = x.dim(1), c = x.dim(2);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      double best = -1e300, second = -1e300;
      for (std::size_t j = 0; j < b; ++j) {
        const double v = x[(i * b + j) * c + k];
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (best - second <= kKinkMargin) return false;
    }
  }
  return true;
}

}  // namespace

ModelParams ProbeParams(const Config& config, std::uint64_t seed) {
  ModelParams p = ModelParams::Initialize(config, seed);
  CounterRng rng(seed, 78, 0);
  for (auto& [name, t] : p.tensors()) {
    const auto dot = name.rfind('.');
    const std::string_view leaf = std::string_view(name).substr(dot + 1);
    const bool bias = leaf.starts_with("b");  // b0.., bq, bv, bo, beta
    if (leaf.starts_with("w")) {
      for (double& v : t.data()) v *= 2.0;
    } else if (bias || leaf == "gamma") {
      for (double& v : t.data()) v += rng.Uniform(-0.2, 0.2);
    }
  }
  return p;
}

std::vector<BlockResult> RunGradCheckSuite(const Config& config, double eps,
                                           std::uint64_t seed) {
  if (auto v = Validate(config); !v.empty()) throw ConfigError(ToString(v.front()));
  std::vector<BlockResult> results;
  auto run = [&](const std::string& name, const std::function<GradCheckResult()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    BlockResult r{name, fn(), 0.0};
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  };
  const std::size_t c = config.channels;
  std::uint64_t stream = 0;
  auto rng_for = [&]() { return CounterRng(seed, 77, stream++); };

  run("matmul", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({5, 3}, rng);
    std::vector<Tensor> in = {RandomTensor({5, 7}, rng), RandomTensor({7, 3}, rng)};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return Project(MatMul(x[0], x[1]), w);
    }, in, eps, {"a", "b"});
  });

  run("softmax", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({4, 6}, rng);
    std::vector<Tensor> in = {RandomTensor({4, 6}, rng, -2.0, 2.0)};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return Project(SoftmaxLast(x[0]), w);
    }, in, eps, {"x"});
  });

  run("layer_norm", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({3, c}, rng);
    std::vector<Tensor> in = {RandomTensor({3, c}, rng), RandomTensor({c}, rng, 0.5, 1.5),
                              RandomTensor({c}, rng)};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return Project(LayerNormLast(x[0], x[1], x[2]), w);
    }, in, eps, {"x", "gamma", "beta"});
  });

  run("mlp", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({4, 3}, rng);
    std::vector<Tensor> in;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      in = {RandomTensor({4, 5}, rng), RandomTensor({5, 6}, rng), RandomTensor({6}, rng),
            RandomTensor({6, 3}, rng), RandomTensor({3}, rng)};
      if (AwayFromKinks(in[0], {in[1], in[3]}, {in[2], in[4]})) break;
    }
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return Project(Mlp(x[0], MlpParams{{x[1], x[3]}, {x[2], x[4]}}), w);
    }, in, eps, {"x", "w0", "b0", "w1", "b1"});
  });

  run("max_pool", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({3, 5}, rng);
    Tensor x;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      x = RandomTensor({3, 4, 5}, rng);
      if (PoolGapsClear(x)) break;
    }
    return FiniteDiffCheck([&](Tape&, std::span<const Var> v) {
      return Project(MaxPoolAxis(v[0], 1), w);
    }, {x}, eps, {"x"});
  });

  run("attention", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({3, c}, rng);
    std::vector<Tensor> in = {RandomTensor({3, c}, rng), RandomTensor({4, c}, rng),
                              RandomTensor({4, c}, rng), RandomTensor({4, c}, rng)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(c));
    for (int k = 0; k < 4; ++k) {
      in.push_back(RandomTensor({c, c}, rng, -bound, bound));
      if (k != 1) in.push_back(RandomTensor({c}, rng, -0.1, 0.1));
    }
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      const AttentionParams p{x[4], x[5], x[6], x[7], x[8], x[9], x[10]};
      return Project(MultiHeadAttention(x[0], x[1], x[2], x[3], p, config.heads), w);
    }, in, eps, {"q", "k", "v", "k_pos", "wq", "bq", "wk", "wv", "bv", "wo", "bo"});
  });

  // Scene-level blocks share one scene, parameter draw and matching.
  const GenConfig gen = ToyGenConfig(seed);
  const Scene scene = GenerateScene(gen, config, 0);
  const ModelParams params = ProbeParams(config, seed);
  Tape base_tape;
  BoundParams base(params, base_tape);
  const QueryBundle bundle = SynthQueries(scene, base, gen, config);
  const ForwardOutputs fwd = Forward(bundle, base, config);
  const Matchings matchings = ComputeMatchings(fwd, scene, config);
  const std::size_t na = bundle.num_agents();
  if (na == 0 || bundle.num_instances() == 0) {
    throw GenerationError("gradient-check scene has no agents or no map");
  }
  const Tensor q_motion =
      FormMotionQueries(bundle.agent_queries, base["mode_bank"]).value();
  const FilteredMap filtered =
      FilterMapForAgent(bundle, 0, config.score_threshold, config.distance_threshold);
  if (!filtered.queries) throw GenerationError("gradient-check agent 0 sees no map");
  const Tensor selected = filtered.queries->value();
  const Tensor instances = EncodeMapInstances(*filtered.queries, base).value();
  const Tensor pe_enc = MapPositionEncoding(filtered.normalized_points, base, config).encoding.value();
  const std::size_t row0[] = {0};
  const Tensor motion0 =
      Reshape(GatherRows(fwd.q_sa, row0), {config.num_modes, c}).value();
  const Tensor fused = FuseMotionQueries(fwd.q_sa, fwd.q_ca).value();

  run("self_block", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor(q_motion.shape(), rng);
    return CheckWithParams(params, NamesWithPrefix(params, {"self."}),
                           {{"q_motion", q_motion}},
                           [&](Tape&, const BoundParams& b, std::span<const Var> x) {
                             return Project(MotionSelfBlock(x[0], b, config), w);
                           }, eps);
  });

  run("vectornet", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({selected.dim(0), c}, rng);
    return CheckWithParams(params, NamesWithPrefix(params, {"vectornet."}),
                           {{"instances", selected}},
                           [&](Tape&, const BoundParams& b, std::span<const Var> x) {
                             return Project(EncodeMapInstances(x[0], b), w);
                           }, eps);
  });

  run("position_encoding", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor(pe_enc.shape(), rng);
    return CheckWithParams(params, NamesWithPrefix(params, {"pe."}), {},
                           [&](Tape&, const BoundParams& b, std::span<const Var>) {
                             return Project(
                                 MapPositionEncoding(filtered.normalized_points, b, config)
                                     .encoding,
                                 w);
                           }, eps);
  });

  run("cross_block", [&] {
    CounterRng rng = rng_for();
    // Random keys: the scene's few nearby instances encode almost alike.
    const Tensor w = RandomTensor(motion0.shape(), rng);
    const Tensor keys = RandomTensor({3, c}, rng);
    const Tensor key_pos = RandomTensor({3, c}, rng);
    return CheckWithParams(
        params, NamesWithPrefix(params, {"cross."}),
        {{"motion", motion0}, {"instances", keys}, {"position_encoding", key_pos}},
        [&](Tape&, const BoundParams& b, std::span<const Var> x) {
          return Project(MotionMapBlock(x[0], x[1], x[2], b, config), w);
        }, eps);
  });

  run("motion_decoder", [&] {
    CounterRng rng = rng_for();
    const Tensor w = RandomTensor({na, config.num_modes, config.horizon, 2}, rng);
    return CheckWithParams(params, NamesWithPrefix(params, {"motion_head."}),
                           {{"fused", fused}},
                           [&](Tape&, const BoundParams& b, std::span<const Var> x) {
                             return Project(DecodeMotion(x[0], b, config), w);
                           }, eps);
  });

  run("perception_heads", [&] {
    CounterRng rng = rng_for();
    const Tensor w1 = RandomTensor(fwd.perception.det_scores.shape(), rng);
    const Tensor w2 = RandomTensor(fwd.perception.det_local.shape(), rng);
    const Tensor w3 = RandomTensor(fwd.perception.map_scores.shape(), rng);
    const Tensor w4 = RandomTensor(fwd.perception.map_local.shape(), rng);
    return CheckWithParams(
        params, NamesWithPrefix(params, {"det_cls.", "det_reg.", "map_cls.", "map_reg."}),
        {{"agent_queries", bundle.agent_queries.value()},
         {"map_queries", bundle.map_queries.value()}},
        [&](Tape&, const BoundParams& b, std::span<const Var> x) {
          QueryBundle qb = bundle;
          qb.agent_queries = x[0];
          qb.map_queries = x[1];
          const PerceptionOutputs p = DecodePerception(qb, b, config);
          return Add(Add(Project(p.det_scores, w1), Project(p.det_local, w2)),
                     Add(Project(p.map_scores, w3), Project(p.map_local, w4)));
        }, eps);
  });

  run("focal_loss", [&] {
    CounterRng rng = rng_for();
    Tensor targets({6, 4});
    for (double& v : targets.data()) v = rng.Bernoulli(0.3) ? 1.0 : 0.0;
    std::vector<Tensor> in = {RandomTensor({6, 4}, rng, 0.05, 0.95)};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return FocalLoss(x[0], targets, config.focal_alpha, config.focal_gamma);
    }, in, eps, {"scores"});
  });

  run("map_loss", [&] {
    std::vector<Tensor> in = {fwd.perception.map_scores.value(),
                              fwd.perception.map_local.value()};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      auto [cls, reg] = MapLoss(x[0], x[1], scene, matchings.map, config,
                                &fwd.perception.map_anchors);
      return Add(cls, reg);
    }, in, eps, {"map_scores", "map_local"});
  });

  run("det_loss", [&] {
    std::vector<Tensor> in = {fwd.perception.det_scores.value(),
                              fwd.perception.det_local.value()};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      auto [cls, reg] = DetLoss(x[0], x[1], scene, matchings.agents, config,
                                &fwd.perception.det_anchors);
      return Add(cls, reg);
    }, in, eps, {"det_scores", "det_local"});
  });

  run("motion_loss", [&] {
    std::vector<Tensor> in = {fwd.offsets.value()};
    return FiniteDiffCheck([&](Tape&, std::span<const Var> x) {
      return MotionLoss(x[0], scene, matchings.agents, config, &matchings.best_modes);
    }, in, eps, {"offsets"});
  });

  run("total_loss", [&] {
    std::vector<std::string> all;
    for (const auto& [name, _] : params.tensors()) all.push_back(name);
    return CheckWithParams(params, all, {},
                           [&](Tape&, const BoundParams& b, std::span<const Var>) {
                             const QueryBundle qb = SynthQueries(scene, b, gen, config);
                             const ForwardOutputs out = Forward(qb, b, config);
                             const LossTerms terms = ComputeLosses(out, scene, matchings, config);
                             return TotalLoss(terms, config.loss_weights);
                           }, eps);
  });
  return results;
}

}  // namespace interact
