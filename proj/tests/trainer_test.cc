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
#include <map>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "interact/errors.h"
#include "interact/params.h"
#include "interact/synthgen.h"
#include "interact/trainer.h"

namespace interact {
namespace {

ModelParams OneParam(double value) {
  ModelParams p;
  p.tensors()["w"] = Tensor({2}, {value, -value});
  return p;
}

std::map<std::string, Tensor> Grad(double g) { return {{"w", Tensor({2}, {g, g})}}; }

TEST(AdamWTest, ZeroGradientAndDecayIsIdentity) {
  ModelParams p = OneParam(0.7);
  OptimState s = OptimState::For(p, {.weight_decay = 0.0});
  for (int i = 0; i < 10; ++i) AdamWStep(p, Grad(0.0), s);
  EXPECT_EQ(p.at("w").values(), (std::vector<double>{0.7, -0.7}));
  EXPECT_EQ(s.step, 10u);
}

TEST(AdamWTest, ConstantGradientMovesLrPerStep) {
  ModelParams p = OneParam(0.0);
  AdamWOptions o;
  o.weight_decay = 0.0;
  OptimState s = OptimState::For(p, o);
  for (int i = 0; i < 1000; ++i) AdamWStep(p, Grad(3.0), s);
  // Bias-corrected moments give m/sqrt(v) = 1 for every step.
  EXPECT_NEAR(p.at("w").values()[0], -1000 * o.lr, 1e-9);
  EXPECT_NEAR(p.at("w").values()[1], -1000 * o.lr, 1e-9);
}

TEST(AdamWTest, DecayOnly) {
  ModelParams p = OneParam(2.0);
  AdamWOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.5;
  OptimState s = OptimState::For(p, o);
  AdamWStep(p, Grad(0.0), s);
  EXPECT_DOUBLE_EQ(p.at("w").values()[0], 2.0 * (1 - 0.05));
}

TEST(AdamWTest, BadGradientsModifyNothing) {
  ModelParams p = OneParam(1.0);
  OptimState s = OptimState::For(p);
  try {
    AdamWStep(p, Grad(std::nan("")), s);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("'w'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(AdamWStep(p, {{"w", Tensor({3})}}, s), DimensionError);
  EXPECT_THROW(AdamWStep(p, {}, s), DimensionError);
  EXPECT_EQ(p.at("w").values(), (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(s.m.at("w").values(), (std::vector<double>{0.0, 0.0}));
}

class TrainTest : public ::testing::Test {
 protected:
  const Config config_ = Config::Tiny();
  const GenConfig gen_ = ToyGenConfig(0);
  const std::vector<Scene> scenes_ = GenerateScenes(gen_, config_, 2);
  const ModelParams params_ = ModelParams::Initialize(config_, 0);
};

TEST_F(TrainTest, ZeroStepsIsIdentity) {
  TrainOptions o;
  o.gen = gen_;
  const TrainResult r = TrainToy(scenes_, params_, config_, o);
  EXPECT_TRUE(r.history.empty());
  EXPECT_FALSE(r.failure);
  EXPECT_EQ(r.params.ToJson(), params_.ToJson());
}

TEST_F(TrainTest, BatchSumsScenes) {
  const Scene* one[] = {&scenes_[0]};
  const Scene* two[] = {&scenes_[0], &scenes_[0]};
  const StepOutput a = ComputeStep(one, params_, config_, gen_);
  const StepOutput b = ComputeStep(two, params_, config_, gen_);
  EXPECT_NEAR(b.record.total, 2 * a.record.total, 1e-12 * a.record.total);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(b.record.terms[k], 2 * a.record.terms[k], 1e-12 * (1 + a.record.terms[k]));
  }
  for (const auto& [name, g] : a.grads) {
    const auto& gb = b.grads.at(name).values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(gb[i], 2 * g.values()[i], 1e-10 * (1 + std::abs(g.values()[i]))) << name;
    }
  }
}

TEST_F(TrainTest, MotionOnlyWeightsLeavePerceptionHeadsUntouched) {
  Config config = config_;
  config.loss_weights = {0, 0, 0, 0, 1};
  const Scene* batch[] = {&scenes_[0]};
  const StepOutput out = ComputeStep(batch, params_, config, gen_);
  EXPECT_GT(out.record.terms[4], 0.0);
  EXPECT_EQ(out.record.total, out.record.terms[4]);
  bool motion_nonzero = false;
  for (const auto& [name, g] : out.grads) {
    const bool head = name.starts_with("det_cls") || name.starts_with("det_reg") ||
                      name.starts_with("map_cls") || name.starts_with("map_reg");
    for (double v : g.values()) {
      if (head) {
        EXPECT_EQ(v, 0.0) << name;
      }
      if (name.starts_with("motion_head") && v != 0.0) motion_nonzero = true;
    }
  }
  EXPECT_TRUE(motion_nonzero);
}

TEST_F(TrainTest, DeterministicAndFinite) {
  TrainOptions o;
  o.steps = 20;
  o.gen = gen_;
  o.adam.lr = 1e-3;
  std::vector<LossRecord> seen;
  const TrainResult a =
      TrainToy(scenes_, params_, config_, o, [&](const LossRecord& r) { seen.push_back(r); });
  const TrainResult b = TrainToy(scenes_, params_, config_, o);
  ASSERT_FALSE(a.failure);
  ASSERT_EQ(a.history.size(), 20u);
  EXPECT_EQ(seen.size(), 20u);
  EXPECT_EQ(a.params.ToJson(), b.params.ToJson());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].step, i);
    EXPECT_EQ(a.history[i].total, b.history[i].total);
    EXPECT_TRUE(std::isfinite(a.history[i].total));
  }
  EXPECT_NE(a.params.ToJson(), params_.ToJson());
}

TEST_F(TrainTest, LossDropsOnToyScene) {
  TrainOptions o;
  o.steps = 150;
  o.gen = gen_;
  o.adam.lr = 3e-3;
  const std::vector<Scene> one(scenes_.begin(), scenes_.begin() + 1);
  const TrainResult r = TrainToy(one, params_, config_, o);
  ASSERT_FALSE(r.failure) << *r.failure;
  double head = 0, tail = 0;
  for (int i = 0; i < 10; ++i) {
    head += r.history[i].total;
    tail += r.history[r.history.size() - 1 - i].total;
  }
  EXPECT_LT(tail, 0.7 * head);
}

TEST_F(TrainTest, DivergenceIsReported) {
  TrainOptions o;
  o.steps = 5;
  o.gen = gen_;
  o.divergence_limit = 1e-9;
  const TrainResult r = TrainToy(scenes_, params_, config_, o);
  ASSERT_TRUE(r.failure);
  EXPECT_EQ(r.history.size(), 1u);
}

TEST(LossCsvTest, Format) {
  LossRecord r;
  r.step = 3;
  r.terms = {0.5, 1, 2, 0.25, 4};
  r.total = 7.75;
  EXPECT_EQ(LossHistoryCsvHeader(), "step,L_det_cls,L_det_reg,L_map_cls,L_map_reg,L_mot_reg,total\n");
  const std::string row = LossRecordCsvRow(r);
  EXPECT_TRUE(row.starts_with("3,0.5,1,2,0.25,4,7.75")) << row;
}

}  // namespace
}  // namespace interact
