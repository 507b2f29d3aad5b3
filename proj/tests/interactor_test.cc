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

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "interact/errors.h"
#include "interact/gradcheck.h"
#include "interact/gradcheck_suite.h"
#include "interact/interactor.h"
#include "interact/losses.h"
#include "interact/ops.h"
#include "interact/params.h"
#include "interact/rng.h"
#include "interact/synthgen.h"
#include "test_util.h"

namespace interact {
namespace {

using testing::RandomTensor;

// Gradient check over the named parameters plus extra probed inputs; the
// remaining parameters are constants.
using ParamLoss = std::function<Var(const BoundParams&, Tape&, std::span<const Var>)>;

GradCheckResult CheckParams(const ModelParams& params,
                            const std::vector<std::string>& names,
                            const std::vector<Tensor>& extra, const ParamLoss& loss) {
  std::vector<Tensor> inputs;
  for (const std::string& n : names) inputs.push_back(params.at(n));
  inputs.insert(inputs.end(), extra.begin(), extra.end());
  auto builder = [&](Tape& tape, std::span<const Var> leaves) {
    std::map<std::string, Var> overrides;
    for (std::size_t i = 0; i < names.size(); ++i) overrides.emplace(names[i], leaves[i]);
    BoundParams bound(params, tape, overrides);
    return loss(bound, tape, leaves.subspan(names.size()));
  };
  return FiniteDiffCheck(builder, inputs);
}

std::vector<std::string> Prefixed(const ModelParams& params, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& [name, _] : params.tensors()) {
    if (name.starts_with(prefix)) out.push_back(name);
  }
  return out;
}

TEST(FormMotionQueriesTest, ZeroOperands) {
  CounterRng rng(1, 0, 0);
  Tape tape;
  const Tensor a = RandomTensor({2, 4}, rng);
  const Tensor m = RandomTensor({3, 4}, rng);
  const Tensor out_a = FormMotionQueries(tape.Constant(a), tape.Constant(Tensor({3, 4}))).value();
  const Tensor out_m = FormMotionQueries(tape.Constant(Tensor({2, 4})), tape.Constant(m)).value();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(out_a[(i * 3 + j) * 4 + c], a.at(i, c));
        EXPECT_EQ(out_m[(i * 3 + j) * 4 + c], m.at(j, c));
      }
    }
  }
}

TEST(FormMotionQueriesTest, MatchesScalarLoopAndIsAdditive) {
  CounterRng rng(2, 0, 0);
  Tape tape;
  const Tensor a = RandomTensor({2, 4}, rng);
  const Tensor m = RandomTensor({3, 4}, rng);
  const Tensor d = RandomTensor({2, 4}, rng);
  const Tensor out = FormMotionQueries(tape.Constant(a), tape.Constant(m)).value();
  ASSERT_EQ(out.shape(), (Shape{2, 3, 4}));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(out[(i * 3 + j) * 4 + c], a.at(i, c) + m.at(j, c));
      }
    }
  }
  // (a + d) + m - (a + m) is d broadcast; compare against the same float sums.
  Tensor ad({2, 4});
  for (std::size_t k = 0; k < 8; ++k) ad[k] = a[k] + d[k];
  const Tensor shifted = FormMotionQueries(tape.Constant(ad), tape.Constant(m)).value();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(shifted[(i * 3 + j) * 4 + c], ad.at(i, c) + m.at(j, c));
      }
    }
  }
}

TEST(FormMotionQueriesTest, ChannelMismatch) {
  Tape tape;
  EXPECT_THROW(FormMotionQueries(tape.Constant(Tensor({2, 4})), tape.Constant(Tensor({3, 5}))),
               DimensionError);
}

class BlockTest : public ::testing::Test {
 protected:
  Config config = Config::Tiny();
  ModelParams params = ProbeParams(config, 3);
};

TEST_F(BlockTest, SingleTokenDependsOnlyOnItself) {
  CounterRng rng(4, 0, 0);
  const Tensor x = RandomTensor({1, 1, 8}, rng);
  Tape t1, t2;
  BoundParams b1(params, t1), b2(params, t2);
  const Tensor y1 = MotionSelfBlock(t1.Constant(x), b1, config).value();
  const Tensor y2 = MotionSelfBlock(t2.Constant(x), b2, config).value();
  EXPECT_EQ(y1, y2);
  EXPECT_EQ(y1.shape(), x.shape());
}

TEST_F(BlockTest, SelfBlockIsPermutationEquivariant) {
  CounterRng rng(5, 0, 0);
  const Tensor x = RandomTensor({3, 2, 8}, rng);
  const std::vector<std::size_t> perm{2, 0, 1};
  Tape tape;
  BoundParams b(params, tape);
  Var xv = tape.Constant(x);
  const Tensor y = MotionSelfBlock(xv, b, config).value();
  const Tensor yp = MotionSelfBlock(GatherRows(xv, perm), b, config).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 16; ++k) {
      EXPECT_NEAR(yp[i * 16 + k], y[perm[i] * 16 + k], 1e-12);
    }
  }
}

TEST_F(BlockTest, SelfBlockGradients) {
  CounterRng rng(6, 0, 0);
  const Tensor x = RandomTensor({3, 2, 8}, rng);
  const Tensor w = RandomTensor({3, 2, 8}, rng);
  const auto r = CheckParams(params, Prefixed(params, "self."), {x},
                             [&](const BoundParams& b, Tape& tape, std::span<const Var> in) {
                               return Sum(Mul(MotionSelfBlock(in[0], b, config),
                                              tape.Constant(w)));
                             });
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

TEST(NormalizeTest, HandCases) {
  const std::vector<Vec2> pts{{5, 5}, {-1, 2}};
  EXPECT_EQ(NormalizeMapForAgent(pts, {0, 0}), pts);
  EXPECT_EQ(NormalizeMapForAgent(pts, {2, 3})[0], (Vec2{3, 2}));
  const Vec2 t{3.5, -8.25};
  const std::vector<Vec2> moved{pts[0] + t, pts[1] + t};
  EXPECT_EQ(NormalizeMapForAgent(moved, Vec2{2, 3} + t), NormalizeMapForAgent(pts, {2, 3}));
}

TEST(TrajectoryCodecTest, HandCases) {
  const std::vector<Vec2> still(4, Vec2{1.5, -2});
  for (Vec2 d : EncodeTrajectory(still, {1.5, -2})) EXPECT_EQ(d, (Vec2{0, 0}));
  const std::vector<Vec2> line{{1, 0}, {2, 0}};
  EXPECT_EQ(EncodeTrajectory(line, {0, 0}), (std::vector<Vec2>{{1, 0}, {1, 0}}));
  EXPECT_EQ(DecodeTrajectory(EncodeTrajectory(line, {0, 0}), {0, 0}), line);
}

TEST(TrajectoryCodecTest, RandomRoundTrip) {
  CounterRng rng(7, 0, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 anchor{rng.Uniform(-50, 50), rng.Uniform(-50, 50)};
    const auto traj = testing::RandomPolyline(12, rng, 51.2);
    const auto back = DecodeTrajectory(EncodeTrajectory(traj, anchor), anchor);
    ASSERT_EQ(back.size(), traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) {
      worst = std::max(worst, (back[t] - traj[t]).Norm());
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(FilterTest, KeepAllAndScoreThreshold) {
  CounterRng rng(8, 0, 0);
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<Vec2>> points;
  for (int i = 0; i < 6; ++i) {
    scores.push_back({rng.Uniform(), rng.Uniform(), rng.Uniform()});
    points.push_back(testing::RandomPolyline(4, rng, 50));
  }
  const auto all = SelectMapInstances(scores, points, {0, 0}, 0.0,
                                      std::numeric_limits<double>::infinity());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  scores[2] = {0.4, 0.1, 0.1};
  points[2] = std::vector<Vec2>(4, Vec2{0, 0});  // right on top of the agent
  const auto kept = SelectMapInstances(scores, points, {0, 0}, 0.5, 100.0);
  EXPECT_EQ(std::count(kept.begin(), kept.end(), 2u), 0);
}

TEST(FilterTest, MatchesBruteForce) {
  CounterRng rng(9, 0, 0);
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<Vec2>> points;
  for (int i = 0; i < 50; ++i) {
    scores.push_back({rng.Uniform(), rng.Uniform(), rng.Uniform()});
    points.push_back(testing::RandomPolyline(4, rng, 50));
  }
  const Vec2 agent{rng.Uniform(-20, 20), rng.Uniform(-20, 20)};
  const double tau = 0.5, mu = 20.5;
  std::vector<std::size_t> expect;
  for (std::size_t i = 0; i < 50; ++i) {
    double s = 0.0;
    for (double v : scores[i]) s = std::max(s, v);
    bool near = false;
    for (Vec2 p : points[i]) {
      const double dx = p.x - agent.x, dy = p.y - agent.y;
      near = near || std::sqrt(dx * dx + dy * dy) <= mu;
    }
    if (s >= tau && near) expect.push_back(i);
  }
  EXPECT_EQ(SelectMapInstances(scores, points, agent, tau, mu), expect);
  EXPECT_FALSE(expect.empty());
}

TEST_F(BlockTest, EncodeMapIdenticalPointsEqualsSinglePoint) {
  CounterRng rng(10, 0, 0);
  const Tensor feat = RandomTensor({1, 1, 8}, rng);
  Tensor rep({1, 4, 8});
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t c = 0; c < 8; ++c) rep[k * 8 + c] = feat[c];
  }
  Tape tape;
  BoundParams b(params, tape);
  EXPECT_EQ(EncodeMapInstances(tape.Constant(rep), b).value(),
            EncodeMapInstances(tape.Constant(feat), b).value());
}

TEST_F(BlockTest, EncodeMapIsPointPermutationInvariant) {
  CounterRng rng(11, 0, 0);
  const Tensor x = RandomTensor({2, 4, 8}, rng);
  Tensor perm({2, 4, 8});
  const std::size_t order[] = {3, 1, 0, 2};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t c = 0; c < 8; ++c) perm[(i * 4 + k) * 8 + c] = x[(i * 4 + order[k]) * 8 + c];
    }
  }
  Tape tape;
  BoundParams b(params, tape);
  EXPECT_EQ(EncodeMapInstances(tape.Constant(x), b).value(),
            EncodeMapInstances(tape.Constant(perm), b).value());
}

TEST_F(BlockTest, EncodeMapGradientsAndEmptyInput) {
  CounterRng rng(12, 0, 0);
  const Tensor x = RandomTensor({2, 4, 8}, rng);
  const Tensor w = RandomTensor({2, 8}, rng);
  const auto r = CheckParams(params, Prefixed(params, "vectornet."), {x},
                             [&](const BoundParams& b, Tape& tape, std::span<const Var> in) {
                               return Sum(Mul(EncodeMapInstances(in[0], b), tape.Constant(w)));
                             });
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
  Tape tape;
  BoundParams b(params, tape);
  EXPECT_THROW(EncodeMapInstances(tape.Constant(Tensor({0, 4, 8})), b), DomainError);
}

TEST_F(BlockTest, RepresentativePoints) {
  Tape tape;
  BoundParams b(params, tape);
  const std::vector<std::vector<Vec2>> polys{
      {{1, 1}, {0, 0}, {2, 2}, {3, 3}},
      {{1, 0}, {3, 0}, {0.5, 0.5}, {4, 4}},
      {{0, 2}, {2, 0}, {-2, 0}, {0, -2}}};
  const PositionEncoding pe = MapPositionEncoding(polys, b, config);
  ASSERT_EQ(pe.points.size(), 3u);
  EXPECT_EQ(pe.points[0], (Vec2{0, 0}));
  EXPECT_EQ(pe.points[1], (Vec2{0.5, 0.5}));
  EXPECT_LT(pe.points[1].Norm(), 1.0);
  EXPECT_EQ(pe.points[2], (Vec2{0, 2}));  // four-way tie, first wins
  EXPECT_EQ(pe.encoding.shape(), (Shape{3, 8}));
  const PositionEncoding again = MapPositionEncoding(polys, b, config);
  EXPECT_EQ(again.encoding.value(), pe.encoding.value());
}

TEST_F(BlockTest, CrossBlockSingleInstanceAndZeroPe) {
  Config plain = config;
  plain.plain_blocks = true;
  CounterRng rng(13, 0, 0);
  const Tensor motion = RandomTensor({2, 8}, rng);
  const Tensor inst = RandomTensor({1, 8}, rng);
  Tape tape;
  BoundParams b(params, tape);
  // A single key takes the full attention weight, so both modes see the same
  // value and leave the plain block with the same feature.
  const Tensor y = MotionMapBlock(tape.Constant(motion), tape.Constant(inst), std::nullopt,
                                  b, plain)
                       .value();
  for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(y.at(0, c), y.at(1, c), 1e-15);

  const Tensor many = RandomTensor({3, 8}, rng);
  Var m = tape.Constant(motion), k = tape.Constant(many);
  EXPECT_EQ(MotionMapBlock(m, k, tape.Constant(Tensor({3, 8})), b, config).value(),
            MotionMapBlock(m, k, std::nullopt, b, config).value());
  EXPECT_EQ(MotionMapBlock(m, std::nullopt, std::nullopt, b, config).value(), Tensor({2, 8}));
}

TEST_F(BlockTest, CrossBlockGradients) {
  CounterRng rng(14, 0, 0);
  const Tensor motion = RandomTensor({2, 8}, rng);
  const Tensor inst = RandomTensor({3, 8}, rng);
  const Tensor pos = RandomTensor({3, 8}, rng);
  const Tensor w = RandomTensor({2, 8}, rng);
  const auto r = CheckParams(params, Prefixed(params, "cross."), {motion, inst, pos},
                             [&](const BoundParams& b, Tape& tape, std::span<const Var> in) {
                               return Sum(Mul(MotionMapBlock(in[0], in[1], in[2], b, config),
                                              tape.Constant(w)));
                             });
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

TEST(FuseTest, ConcatenatesSelfFirst) {
  Tape tape;
  Var a = tape.Constant(Tensor({1, 1, 1}, std::vector<double>{2.0}));
  Var b = tape.Constant(Tensor({1, 1, 1}, std::vector<double>{-3.0}));
  EXPECT_EQ(FuseMotionQueries(a, b).value().values(), (std::vector<double>{2.0, -3.0}));
  CounterRng rng(15, 0, 0);
  for (std::size_t c : {1u, 3u, 8u}) {
    Var x = tape.Constant(RandomTensor({2, 3, c}, rng));
    Var y = tape.Constant(RandomTensor({2, 3, c}, rng));
    Var f = FuseMotionQueries(x, y);
    EXPECT_EQ(f.shape().back(), 2 * c);
    EXPECT_EQ(SliceLast(f, 0, c).value(), x.value());
  }
  EXPECT_THROW(FuseMotionQueries(tape.Constant(Tensor({2, 3, 4})),
                                 tape.Constant(Tensor({2, 2, 4}))),
               DimensionError);
}

TEST_F(BlockTest, DecodeMotionZeroWeightsStayAtCenter) {
  ModelParams zero = params;
  for (const std::string& n : Prefixed(zero, "motion_head.")) {
    for (double& v : zero.at(n).data()) v = 0.0;
  }
  CounterRng rng(16, 0, 0);
  Tape tape;
  BoundParams b(zero, tape);
  const Tensor off = DecodeMotion(tape.Constant(RandomTensor({3, 2, 16}, rng)), b, config).value();
  EXPECT_EQ(off.shape(), (Shape{3, 2, 3, 2}));
  for (double v : off.values()) EXPECT_EQ(v, 0.0);
  const std::vector<Vec2> offsets(3, Vec2{0, 0});
  for (Vec2 p : DecodeTrajectory(offsets, {4, 5})) EXPECT_EQ(p, (Vec2{4, 5}));
}

TEST_F(BlockTest, DecodeMotionShapes) {
  Tape tape;
  BoundParams b(params, tape);
  for (std::size_t na : {1u, 4u}) {
    const Tensor off = DecodeMotion(tape.Constant(Tensor({na, 2, 16}, 0.3)), b, config).value();
    EXPECT_EQ(off.shape(), (Shape{na, 2, 3, 2}));
  }
}

TEST_F(BlockTest, DecodeMotionWithL1Gradients) {
  CounterRng rng(17, 0, 0);
  const Tensor fused = RandomTensor({2, 2, 16}, rng);
  const Tensor target = RandomTensor({2, 2, 3, 2}, rng, -5, 5);
  const auto r = CheckParams(params, Prefixed(params, "motion_head."), {fused},
                             [&](const BoundParams& b, Tape& tape, std::span<const Var> in) {
                               return Sum(Abs(Sub(DecodeMotion(in[0], b, config),
                                                  tape.Constant(target))));
                             });
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

QueryBundle BundleFor(const Scene& scene, const BoundParams& b, const Config& config) {
  return SynthQueries(scene, b, ToyGenConfig(0), config);
}

TEST_F(BlockTest, PerceptionZeroClsWeightsGiveSigmoidBias) {
  ModelParams p = ModelParams::Initialize(config, 1);
  for (const char* n : {"det_cls.w1", "map_cls.w1"}) {
    for (double& v : p.at(n).data()) v = 0.0;
  }
  for (double& v : p.at("det_cls.b1").data()) v = 0.7;
  const Scene scene = GenerateScene(ToyGenConfig(1), config, 0);
  Tape tape;
  BoundParams b(p, tape);
  const PerceptionOutputs out = DecodePerception(BundleFor(scene, b, config), b, config);
  for (double v : out.det_scores.value().values()) EXPECT_EQ(v, 1.0 / (1.0 + std::exp(-0.7)));
  for (double v : out.map_scores.value().values()) EXPECT_EQ(v, 0.5);
}

TEST_F(BlockTest, PerceptionScoresInOpenUnitInterval) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene scene = GenerateScene(ToyGenConfig(seed), config, 0);
    const ModelParams p = ProbeParams(config, seed);
    Tape tape;
    BoundParams b(p, tape);
    const PerceptionOutputs out = DecodePerception(BundleFor(scene, b, config), b, config);
    for (const Var& v : {out.det_scores, out.map_scores}) {
      for (double s : v.value().values()) {
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
      }
    }
    for (std::size_t i = 0; i < scene.agents.size(); ++i) {
      EXPECT_GT(out.det_boxes.value().at(i, 2), 0.0);
      EXPECT_GT(out.det_boxes.value().at(i, 3), 0.0);
    }
  }
}

TEST_F(BlockTest, PerceptionHeadsWithFocalGradients) {
  CounterRng rng(18, 0, 0);
  const Tensor queries = RandomTensor({3, 8}, rng);
  Tensor targets({3, 4});
  targets.at(0, 0) = targets.at(1, 1) = 1.0;
  std::vector<std::string> names = Prefixed(params, "det_cls.");
  const auto r = CheckParams(params, names, {queries},
                             [&](const BoundParams& b, Tape&, std::span<const Var> in) {
                               Var s = Sigmoid(Mlp(in[0], b.Mlp("det_cls")));
                               return FocalLoss(s, targets, 0.25, 2.0);
                             });
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

TEST_F(BlockTest, EmptyMapUsesSelfBranchOnly) {
  Scene scene = GenerateScene(ToyGenConfig(2), config, 0);
  scene.map_instances.clear();
  scene.agents.resize(1);
  Tape tape;
  BoundParams b(params, tape);
  const QueryBundle bundle = BundleFor(scene, b, config);
  const ForwardOutputs out = Forward(bundle, b, config);
  EXPECT_EQ(out.q_ca.value(), Tensor({1, 2, 8}));
  EXPECT_TRUE(out.selected[0].empty());
  const PredictionSet p = ToPredictionSet(out, "x", config);
  ASSERT_EQ(p.agents.size(), 1u);
  EXPECT_TRUE(p.map.empty());
}

TEST_F(BlockTest, OutputCountsFollowShapeContract) {
  const Scene scene = GenerateScene(ToyGenConfig(3), config, 0);
  Tape tape;
  BoundParams b(params, tape);
  const PredictionSet p = FullForward(BundleFor(scene, b, config), b, config, scene.scene_id);
  EXPECT_EQ(p.map.size(), scene.map_instances.size());
  EXPECT_EQ(p.agents.size(), scene.agents.size());
  for (const PredAgent& a : p.agents) {
    ASSERT_EQ(a.forecast.size(), config.num_modes);
    for (const auto& mode : a.forecast) EXPECT_EQ(mode.size(), config.horizon);
  }
  EXPECT_TRUE(Validate(p, config).empty());
}

TEST_F(BlockTest, FusedSliceRecoversSelfBranch) {
  const Scene scene = GenerateScene(ToyGenConfig(4), config, 0);
  Tape tape;
  BoundParams b(params, tape);
  const ForwardOutputs out = Forward(BundleFor(scene, b, config), b, config);
  EXPECT_EQ(SliceLast(FuseMotionQueries(out.q_sa, out.q_ca), 0, 8).value(), out.q_sa.value());
}

TEST_F(BlockTest, FarMapChangesDoNotReachAgent) {
  Config cfg = config;
  cfg.distance_threshold = 5.0;
  const Scene scene = GenerateScene(ToyGenConfig(5), cfg, 0);
  Tape tape;
  BoundParams b(params, tape);
  QueryBundle bundle = BundleFor(scene, b, cfg);
  const ForwardOutputs base = Forward(bundle, b, cfg);
  // Move every instance agent 0 does not select far away and rewrite its
  // features; agent 0's cross-attention output must not move.
  const auto& kept = base.selected[0];
  ASSERT_LT(kept.size(), bundle.num_instances());
  CounterRng rng(19, 0, 0);
  Tensor q = bundle.map_queries.value();
  for (std::size_t i = 0; i < bundle.num_instances(); ++i) {
    if (std::count(kept.begin(), kept.end(), i)) continue;
    for (Vec2& p : bundle.map_points[i]) p = bundle.agent_positions[0] + Vec2{40.0, 40.0};
    for (std::size_t k = 0; k < cfg.num_points * cfg.channels; ++k) {
      q[i * cfg.num_points * cfg.channels + k] = rng.Uniform(-3, 3);
    }
  }
  bundle.map_queries = tape.Constant(q);
  const ForwardOutputs moved = Forward(bundle, b, cfg);
  for (std::size_t k = 0; k < cfg.num_modes * cfg.channels; ++k) {
    EXPECT_EQ(moved.q_ca.value()[k], base.q_ca.value()[k]);
  }
}

TEST_F(BlockTest, JointTranslationLeavesOffsetsBitwise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GenConfig gen;
    gen.seed = seed;
    const Scene scene = GenerateScene(gen, config, 0);
    Tape tape;
    BoundParams b(params, tape);
    const QueryBundle bundle = SynthQueries(scene, b, gen, config);
    QueryBundle moved = bundle;
    const Vec2 t{17.0, -9.5};
    for (Vec2& p : moved.agent_positions) p = p + t;
    for (auto& poly : moved.map_points) {
      for (Vec2& p : poly) p = p + t;
    }
    const ForwardOutputs a = Forward(bundle, b, config);
    const ForwardOutputs c = Forward(moved, b, config);
    EXPECT_EQ(a.offsets.value(), c.offsets.value()) << "seed " << seed;
    EXPECT_EQ(a.selected, c.selected);
  }
}

TEST(ParamsTest, ModeBankRowsAreOrthogonal) {
  for (const Config& config : {Config::Tiny(), Config{}}) {
    const ModelParams params = ModelParams::Initialize(config, 9);
    const Tensor& m = params.at("mode_bank");
    for (std::size_t i = 0; i < m.dim(0); ++i) {
      for (std::size_t j = i + 1; j < m.dim(0); ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < m.dim(1); ++c) dot += m.at(i, c) * m.at(j, c);
        EXPECT_LT(std::abs(dot), 1e-10);
      }
    }
  }
}

TEST(ParamsTest, InitializationRules) {
  const Config config = Config::Tiny();
  const ModelParams p = ModelParams::Initialize(config, 4);
  EXPECT_TRUE(p.Check(config).empty());
  for (double v : p.at("self.ffn.b0").values()) EXPECT_EQ(v, 0.0);
  for (double v : p.at("cross.norm1.gamma").values()) EXPECT_EQ(v, 1.0);
  const double bound = 1.0 / std::sqrt(16.0);
  for (double v : p.at("motion_head.w0").values()) EXPECT_LE(std::abs(v), bound);
  EXPECT_EQ(ModelParams::Initialize(config, 4), p);
  EXPECT_NE(ModelParams::Initialize(config, 5), p);
}

TEST(ParamsTest, CheckFlagsMissingMisshapenAndOrphans) {
  const Config config = Config::Tiny();
  ModelParams p = ModelParams::Initialize(config, 0);
  p.tensors().erase("pe.w0");
  p.at("map_reg.b1") = Tensor({3});
  p.tensors().emplace("extra", Tensor({1}));
  const auto v = p.Check(config);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].field, "map_reg.b1");
  EXPECT_EQ(v[1].field, "pe.w0");
  EXPECT_EQ(v[2].rule, "orphan parameter");
  EXPECT_FALSE(ModelParams::Initialize(Config{}, 0).Check(config).empty());
}

TEST(ParamsTest, JsonRoundTripIsBitwise) {
  const ModelParams p = ProbeParams(Config::Tiny(), 6);
  EXPECT_EQ(ModelParams::FromJson(p.ToJson()), p);
  EXPECT_THROW(ModelParams::FromJson(R"({"a": {"shape": [2], "values": [1]}})"), ParseError);
  EXPECT_THROW(ModelParams::FromJson("[]"), ParseError);
}

}  // namespace
}  // namespace interact
