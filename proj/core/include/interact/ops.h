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

// Differentiable primitives. Every function records one node (or a short
// chain of nodes) on the tape of its first operand. "Trailing" operations
// act on the last axis and treat all leading axes as a flat batch.

#ifndef INTERACT_OPS_H_
#define INTERACT_OPS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "interact/tensor.h"

namespace interact {

// [m x k] * [k x n] -> [m x n].
Var MatMul(Var a, Var b);
// Rank-2 transpose.
Var Transpose(Var a);

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double factor);
// x[..., c] + bias[c].
Var AddBias(Var x, Var bias);

Var Relu(Var x);
Var Sigmoid(Var x);
// log(1 + exp(x)), always positive.
Var Softplus(Var x);
Var Abs(Var x);

// Sum of all elements, shape []. Compensated, so that terms too small to
// move the total leave it bitwise unchanged.
Var Sum(Var x);

// sum_k weights[k] * Sum(xs[k]) in one compensated pass; weights default to
// 1. All xs must share a tape.
Var SumOf(std::span<const Var> xs, std::span<const double> weights = {});

Var Reshape(Var x, Shape shape);
// Channels [begin, end) of the last axis.
Var SliceLast(Var x, std::size_t begin, std::size_t end);
// Concatenation along the last axis; leading shapes must agree.
Var ConcatLast(std::span<const Var> parts);
// Stacks equally shaped values along a new leading axis.
Var Stack(std::span<const Var> parts);
// Rows of axis 0 picked by `rows` (repeats allowed).
Var GatherRows(Var x, std::span<const std::size_t> rows);
// Inserts a new axis of size `count` at `axis`, repeating the input.
Var Expand(Var x, std::size_t axis, std::size_t count);
// Prefix sum along `axis`.
Var CumsumAxis(Var x, std::size_t axis);

// Softmax over the last axis with max subtraction.
Var SoftmaxLast(Var x);
// Normalises the last axis to zero mean / unit variance, then applies
// gamma[c] * xhat + beta[c].
Var LayerNormLast(Var x, Var gamma, Var beta, double eps = 1e-5);
// Maximum along `axis` (axis removed). Gradient goes to the first maximal
// index. Throws DomainError on an empty axis.
Var MaxPoolAxis(Var x, std::size_t axis);

// Affine map of the trailing dimension: x[..., in] * w[in x out] + b[out].
Var Linear(Var x, Var w, Var b);

struct MlpParams {
  std::vector<Var> weights;  // weights[l] is [in_l x out_l]
  std::vector<Var> biases;   // biases[l] is [out_l]
};
// Affine layers with ReLU between them and no activation after the last.
Var Mlp(Var x, const MlpParams& params);

struct AttentionParams {
  Var wq, bq, wk, wv, bv, wo, bo;  // [C x C] weights, [C] biases
};
// Multi-head scaled dot-product attention. q is [Lq x C]; k and v are
// [Lk x C]. When present, k_pos is added to k before the key projection.
// Throws ConfigError when C is not divisible by `heads`.
Var MultiHeadAttention(Var q, Var k, Var v, std::optional<Var> k_pos,
                       const AttentionParams& params, std::size_t heads);

}  // namespace interact

#endif  // INTERACT_OPS_H_
