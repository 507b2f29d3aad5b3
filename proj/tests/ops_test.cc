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
#include <vector>

#include "gtest/gtest.h"
#include "interact/errors.h"
#include "interact/gradcheck.h"
#include "interact/ops.h"
#include "interact/rng.h"
#include "interact/tensor.h"
#include "test_util.h"

namespace interact {
namespace {

using testing::RandomTensor;

TEST(TensorTest, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6)));
}

TEST(TensorTest, ReshapeKeepsData) {
  Tensor t = Tensor::FromRows({{1, 2, 3}, {4, 5, 6}});
  Tensor r = t.Reshaped({3, 2});
  EXPECT_EQ(r.values(), t.values());
  EXPECT_THROW(t.Reshaped({4}), DimensionError);
}

TEST(MatMulTest, IdentityAndHandCase) {
  Tape tape;
  Var id = tape.Constant(Tensor::FromRows({{1, 0}, {0, 1}}));
  Var b = tape.Constant(Tensor::FromRows({{3, 4}, {5, 6}}));
  EXPECT_EQ(MatMul(id, b).value(), b.value());
  Var r = tape.Constant(Tensor::FromRows({{1, 2}}));
  Var c = tape.Constant(Tensor::FromRows({{3}, {4}}));
  EXPECT_EQ(MatMul(r, c).value().values(), std::vector<double>{11.0});
}

TEST(MatMulTest, ShapeMismatchNamesBothShapes) {
  Tape tape;
  Var a = tape.Constant(Tensor({2, 3}));
  Var b = tape.Constant(Tensor({4, 5}));
  try {
    MatMul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(MatMulTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(1, 0, 0);
  const Tensor a = RandomTensor({5, 7}, rng);
  const Tensor b = RandomTensor({7, 3}, rng);
  const Tensor w = RandomTensor({5, 3}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> x) {
    return Sum(Mul(MatMul(x[0], x[1]), tape.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {a, b}).max_rel_error, 1e-6);
}

TEST(SoftmaxTest, UniformAndLargeLogits) {
  Tape tape;
  Var u = SoftmaxLast(tape.Constant(Tensor({3}, 0.0)));
  for (double v : u.value().values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
  Var big = SoftmaxLast(tape.Constant(Tensor({2}, std::vector<double>{1000.0, 0.0})));
  EXPECT_TRUE(big.value().AllFinite());
  EXPECT_NEAR(big.value()[0], 1.0, 1e-12);
  EXPECT_NEAR(big.value()[1], 0.0, 1e-12);
}

TEST(SoftmaxTest, RowsSumToOneAndJacobianMatches) {
  CounterRng rng(2, 0, 0);
  const Tensor x = RandomTensor({4, 6}, rng, -3.0, 3.0);
  Tape tape;
  const Tensor y = SoftmaxLast(tape.Constant(x)).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_GE(y.at(r, c), 0.0);
      s += y.at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const Tensor w = RandomTensor({4, 6}, rng);
  auto loss = [&](Tape& t, std::span<const Var> v) {
    return Sum(Mul(SoftmaxLast(v[0]), t.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x}).max_rel_error, 1e-5);
}

struct AttentionInputs {
  Tensor q, k, v, kpos;
  std::vector<Tensor> params;  // wq, bq, wk, wv, bv, wo, bo
};

AttentionInputs RandomAttention(std::size_t lq, std::size_t lk, std::size_t c,
                                std::uint64_t seed) {
  CounterRng rng(seed, 0, 0);
  AttentionInputs in;
  in.q = RandomTensor({lq, c}, rng);
  in.k = RandomTensor({lk, c}, rng);
  in.v = RandomTensor({lk, c}, rng);
  in.kpos = RandomTensor({lk, c}, rng);
  for (int i = 0; i < 7; ++i) {
    const bool weight = i == 0 || i == 2 || i == 3 || i == 5;
    in.params.push_back(weight ? RandomTensor({c, c}, rng) : RandomTensor({c}, rng));
  }
  return in;
}

AttentionParams Bind(std::span<const Var> p) {
  return {p[0], p[1], p[2], p[3], p[4], p[5], p[6]};
}

TEST(AttentionTest, SingleKeyReturnsProjectedValue) {
  const AttentionInputs in = RandomAttention(3, 1, 8, 3);
  Tape tape;
  std::vector<Var> p;
  for (const Tensor& t : in.params) p.push_back(tape.Constant(t));
  Var out = MultiHeadAttention(tape.Constant(in.q), tape.Constant(in.k),
                               tape.Constant(in.v), std::nullopt, Bind(p), 2);
  // softmax over one key is exactly 1, so every query row sees v's projection.
  Var proj = Linear(Linear(tape.Constant(in.v), p[3], p[4]), p[5], p[6]);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_NEAR(out.value().at(r, c), proj.value().at(0, c), 1e-14);
    }
  }
}

TEST(AttentionTest, ZeroKeyPositionIsIdentity) {
  const AttentionInputs in = RandomAttention(3, 4, 8, 4);
  Tape tape;
  std::vector<Var> p;
  for (const Tensor& t : in.params) p.push_back(tape.Constant(t));
  Var q = tape.Constant(in.q), k = tape.Constant(in.k), v = tape.Constant(in.v);
  Var with = MultiHeadAttention(q, k, v, tape.Constant(Tensor({4, 8})), Bind(p), 2);
  Var without = MultiHeadAttention(q, k, v, std::nullopt, Bind(p), 2);
  EXPECT_EQ(with.value(), without.value());
}

TEST(AttentionTest, SingleHeadIdentityProjectionsIsPlainAttention) {
  const std::size_t lq = 3, lk = 5, c = 4;
  CounterRng rng(5, 0, 0);
  const Tensor q = RandomTensor({lq, c}, rng);
  const Tensor k = RandomTensor({lk, c}, rng);
  const Tensor v = RandomTensor({lk, c}, rng);
  Tensor eye({c, c});
  for (std::size_t i = 0; i < c; ++i) eye.at(i, i) = 1.0;
  Tape tape;
  Var id = tape.Constant(eye), zero = tape.Constant(Tensor({c}));
  AttentionParams p{id, zero, id, id, zero, id, zero};
  const Tensor out =
      MultiHeadAttention(tape.Constant(q), tape.Constant(k), tape.Constant(v),
                         std::nullopt, p, 1)
          .value();
  for (std::size_t i = 0; i < lq; ++i) {
    std::vector<double> logits(lk);
    double mx = -1e300;
    for (std::size_t j = 0; j < lk; ++j) {
      double d = 0.0;
      for (std::size_t x = 0; x < c; ++x) d += q.at(i, x) * k.at(j, x);
      logits[j] = d / std::sqrt(static_cast<double>(c));
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t x = 0; x < c; ++x) {
      double expect = 0.0;
      for (std::size_t j = 0; j < lk; ++j) expect += logits[j] / z * v.at(j, x);
      EXPECT_NEAR(out.at(i, x), expect, 1e-13);
    }
  }
}

TEST(AttentionTest, HeadsMustDivideChannels) {
  const AttentionInputs in = RandomAttention(2, 2, 8, 6);
  Tape tape;
  std::vector<Var> p;
  for (const Tensor& t : in.params) p.push_back(tape.Constant(t));
  EXPECT_THROW(MultiHeadAttention(tape.Constant(in.q), tape.Constant(in.k),
                                  tape.Constant(in.v), std::nullopt, Bind(p), 3),
               ConfigError);
}

TEST(AttentionTest, TinyGradientsMatchFiniteDifferences) {
  const AttentionInputs in = RandomAttention(3, 4, 8, 7);
  CounterRng rng(7, 1, 0);
  const Tensor w = RandomTensor({3, 8}, rng);
  std::vector<Tensor> inputs{in.q, in.k, in.v, in.kpos};
  inputs.insert(inputs.end(), in.params.begin(), in.params.end());
  auto loss = [&](Tape& tape, std::span<const Var> x) {
    Var out = MultiHeadAttention(x[0], x[1], x[2], x[3], Bind(x.subspan(4)), 2);
    return Sum(Mul(out, tape.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, inputs).max_rel_error, 1e-5);
}

TEST(MlpTest, ZeroWeightsGiveBias) {
  Tape tape;
  Tensor bias({3}, std::vector<double>{0.5, -1.0, 2.0});
  MlpParams p{{tape.Constant(Tensor({4, 3}))}, {tape.Constant(bias)}};
  CounterRng rng(8, 0, 0);
  const Tensor out = Mlp(tape.Constant(RandomTensor({2, 4}, rng)), p).value();
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(r, c), bias[c]);
  }
}

TEST(MlpTest, IdentityLayerPassesThrough) {
  Tape tape;
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  MlpParams p{{tape.Constant(eye)}, {tape.Constant(Tensor({3}))}};
  CounterRng rng(9, 0, 0);
  const Tensor x = RandomTensor({2, 3}, rng);
  EXPECT_EQ(Mlp(tape.Constant(x), p).value(), x);
}

TEST(MlpTest, SizeMismatchThrows) {
  Tape tape;
  MlpParams p{{tape.Constant(Tensor({4, 3}))}, {tape.Constant(Tensor({3}))}};
  EXPECT_THROW(Mlp(tape.Constant(Tensor({2, 5})), p), DimensionError);
}

TEST(MlpTest, TwoLayerGradientsAwayFromKinks) {
  CounterRng rng(10, 0, 0);
  Tensor x, w0, b0, w1, b1;
  // Resample until no hidden pre-activation sits within 1e-3 of the kink.
  for (int attempt = 0;; ++attempt) {
    ASSERT_LT(attempt, 100);
    x = RandomTensor({3, 4}, rng);
    w0 = RandomTensor({4, 5}, rng);
    b0 = RandomTensor({5}, rng);
    w1 = RandomTensor({5, 2}, rng);
    b1 = RandomTensor({2}, rng);
    Tape tape;
    const Tensor z =
        Linear(tape.Constant(x), tape.Constant(w0), tape.Constant(b0)).value();
    bool clear = true;
    for (double v : z.values()) clear = clear && std::abs(v) >= 1e-3;
    if (clear) break;
  }
  const Tensor w = RandomTensor({3, 2}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> v) {
    MlpParams p{{v[1], v[3]}, {v[2], v[4]}};
    return Sum(Mul(Mlp(v[0], p), tape.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x, w0, b0, w1, b1}).max_rel_error, 1e-5);
}

TEST(MaxPoolTest, PoolsAxisZero) {
  Tape tape;
  Var out = MaxPoolAxis(tape.Constant(Tensor::FromRows({{1, 5}, {3, 2}})), 0);
  EXPECT_EQ(out.value().values(), (std::vector<double>{3, 5}));
}

TEST(MaxPoolTest, TiesSendGradientToFirstIndex) {
  Tape tape;
  Var x = tape.Leaf(Tensor({4}, 2.0));
  Gradients g = tape.Backward(MaxPoolAxis(x, 0));
  EXPECT_EQ(g[x].values(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(MaxPoolTest, EmptyAxisThrows) {
  Tape tape;
  EXPECT_THROW(MaxPoolAxis(tape.Constant(Tensor({0, 3})), 0), DomainError);
}

TEST(MaxPoolTest, GradientsWithClearMaxima) {
  // Distinct values on a 0.01 lattice keep every max gap above 1e-3.
  const std::size_t n = 24;
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = 0.01 * static_cast<double>((i * 7) % n);
  const Tensor x({2, 3, 4}, vals);
  CounterRng rng(11, 0, 0);
  const Tensor w = RandomTensor({2, 4}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> v) {
    return Sum(Mul(MaxPoolAxis(v[0], 1), tape.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x}, 1e-5).max_rel_error, 1e-5);
}

TEST(BackwardTest, IdentityAndSquare) {
  Tape tape;
  Var x = tape.Leaf(Tensor::Scalar(3.0));
  EXPECT_EQ(tape.Backward(x)[x][0], 1.0);
  Var y = tape.Leaf(Tensor({2}, std::vector<double>{1, 2}));
  Gradients g = tape.Backward(Sum(Mul(y, y)));
  EXPECT_EQ(g[y].values(), (std::vector<double>{2, 4}));
}

TEST(BackwardTest, RejectsNonScalarLoss) {
  Tape tape;
  Var x = tape.Leaf(Tensor({2}));
  EXPECT_THROW(tape.Backward(x), ContractError);
  Tape other;
  Var z = other.Leaf(Tensor::Scalar(1.0));
  EXPECT_THROW(tape.Backward(z), ContractError);
}

TEST(BackwardTest, ReusedValueAccumulates) {
  Tape tape;
  Var x = tape.Leaf(Tensor({3}, std::vector<double>{1, -2, 4}));
  // x consumed three times: d/dx (sum x + sum 2x + sum x*1) = 4.
  std::vector<Var> terms{Sum(x), Sum(Scale(x, 2.0)), Sum(Mul(x, tape.Constant(Tensor({3}, 1.0))))};
  Gradients g = tape.Backward(SumOf(terms));
  EXPECT_EQ(g[x].values(), (std::vector<double>{4, 4, 4}));
}

TEST(BackwardTest, UnreachableLeafGetsZeros) {
  Tape tape;
  Var x = tape.Leaf(Tensor({2}, 1.0));
  Var unused = tape.Leaf(Tensor({3}, 1.0));
  Gradients g = tape.Backward(Sum(x));
  EXPECT_EQ(g[unused], Tensor({3}));
}

TEST(SumOfTest, WeightsAndErrors) {
  Tape tape;
  Var a = tape.Leaf(Tensor({2}, std::vector<double>{1, 2}));
  Var b = tape.Leaf(Tensor::Scalar(5.0));
  std::vector<Var> xs{a, b};
  std::vector<double> w{2.0, -1.0};
  Var s = SumOf(xs, w);
  EXPECT_EQ(s.value()[0], 1.0);
  Gradients g = tape.Backward(s);
  EXPECT_EQ(g[a].values(), (std::vector<double>{2, 2}));
  EXPECT_EQ(g[b][0], -1.0);
  std::vector<double> bad{1.0};
  EXPECT_THROW(SumOf(xs, bad), DimensionError);
  EXPECT_THROW(SumOf(std::span<const Var>{}), ContractError);
}

TEST(SumTest, CompensatedAgainstTinyTerms) {
  Tape tape;
  std::vector<double> v(1001, 1e-17);
  v[0] = 1.0;
  Var s = Sum(tape.Constant(Tensor({v.size()}, v)));
  EXPECT_DOUBLE_EQ(s.value()[0], 1.0 + 1e-14);
}

TEST(LayerNormTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(12, 0, 0);
  const Tensor x = RandomTensor({3, 6}, rng, -2.0, 2.0);
  const Tensor gamma = RandomTensor({6}, rng, 0.5, 1.5);
  const Tensor beta = RandomTensor({6}, rng);
  const Tensor w = RandomTensor({3, 6}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> v) {
    return Sum(Mul(LayerNormLast(v[0], v[1], v[2]), tape.Constant(w)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x, gamma, beta}).max_rel_error, 1e-5);
}

TEST(ElementwiseTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(13, 0, 0);
  // Keep Abs and Relu inputs away from zero.
  Tensor x = RandomTensor({2, 5}, rng, 0.2, 1.5);
  for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
  const Tensor bias = RandomTensor({5}, rng);
  const Tensor w = RandomTensor({2, 10}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> v) {
    std::vector<Var> parts{Sigmoid(v[0]), Softplus(AddBias(v[0], v[1])), Abs(v[0]),
                           Relu(v[0])};
    Var cat = ConcatLast(std::span<const Var>(parts.data(), 2));
    Var other = ConcatLast(std::span<const Var>(parts.data() + 2, 2));
    Var mixed = Add(Mul(cat, tape.Constant(w)), Scale(other, 0.5));
    return Sum(CumsumAxis(Transpose(mixed), 0));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x, bias}).max_rel_error, 1e-5);
}

TEST(ShapeOpsTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(14, 0, 0);
  const Tensor x = RandomTensor({3, 4}, rng);
  const Tensor w = RandomTensor({2, 3, 2}, rng);
  auto loss = [&](Tape& tape, std::span<const Var> v) {
    const std::vector<std::size_t> rows{2, 0, 2};
    Var g = GatherRows(v[0], rows);               // [3 x 4]
    Var s = SliceLast(g, 1, 3);                   // [3 x 2]
    Var e = Expand(s, 0, 2);                      // [2 x 3 x 2]
    std::vector<Var> st{Reshape(v[0], {4, 3}), Reshape(v[0], {4, 3})};
    Var stacked = Stack(st);                      // [2 x 4 x 3]
    return Add(Sum(Mul(e, tape.Constant(w))), Sum(Mul(stacked, stacked)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {x}).max_rel_error, 1e-5);
}

TEST(DeterminismTest, RepeatedForwardIsBitwiseEqual) {
  const AttentionInputs in = RandomAttention(3, 4, 8, 15);
  auto run = [&] {
    Tape tape;
    std::vector<Var> p;
    for (const Tensor& t : in.params) p.push_back(tape.Constant(t));
    return MultiHeadAttention(tape.Constant(in.q), tape.Constant(in.k),
                              tape.Constant(in.v), tape.Constant(in.kpos), Bind(p), 2)
        .value();
  };
  EXPECT_EQ(run(), run());
}

TEST(FiniteDiffCheckTest, SquareAndConstant) {
  auto square = [](Tape&, std::span<const Var> v) { return Sum(Mul(v[0], v[0])); };
  EXPECT_LT(FiniteDiffCheck(square, {Tensor::Scalar(3.0)}).max_rel_error, 1e-9);
  auto constant = [](Tape& tape, std::span<const Var>) {
    return tape.Constant(Tensor::Scalar(7.0));
  };
  const GradCheckResult r = FiniteDiffCheck(constant, {Tensor({3}, 1.0)});
  EXPECT_EQ(r.max_rel_error, 0.0);
  EXPECT_EQ(r.coordinates, 3u);
}

TEST(FiniteDiffCheckTest, NonFiniteAndBadEps) {
  auto log_loss = [](Tape&, std::span<const Var> v) {
    return Sum(Scale(Relu(v[0]), std::numeric_limits<double>::infinity()));
  };
  EXPECT_THROW(FiniteDiffCheck(log_loss, {Tensor::Scalar(1.0)}), NumericalError);
  auto square = [](Tape&, std::span<const Var> v) { return Sum(Mul(v[0], v[0])); };
  EXPECT_THROW(FiniteDiffCheck(square, {Tensor::Scalar(1.0)}, 0.0), ContractError);
}

TEST(FiniteDiffCheckTest, MatchesHandDerivativeOfMatMul) {
  // d/dA sum(A B) = 1 B^T; the check must agree with the closed form.
  const Tensor a = Tensor::FromRows({{1, 2}, {3, 4}});
  const Tensor b = Tensor::FromRows({{0.5, -1}, {2, 0.25}});
  Tape tape;
  Var av = tape.Leaf(a);
  Gradients g = tape.Backward(Sum(MatMul(av, tape.Constant(b))));
  EXPECT_EQ(g[av].values(), (std::vector<double>{-0.5, 2.25, -0.5, 2.25}));
  auto loss = [&](Tape& t, std::span<const Var> v) {
    return Sum(MatMul(v[0], t.Constant(b)));
  };
  EXPECT_LT(FiniteDiffCheck(loss, {a}).max_rel_error, 1e-9);
}

}  // namespace
}  // namespace interact
