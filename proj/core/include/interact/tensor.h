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

// Dense row-major f64 arrays and the reverse-mode derivative record.
//
// A Tape owns every value produced during one forward pass. Operations
// append a node holding the output value, the operand handles, and a rule
// that pushes the output gradient back to the operands. Tape::Backward
// replays the nodes in reverse creation order. Tapes are cheap and meant to
// be discarded after a single backward pass.

#ifndef INTERACT_TENSOR_H_
#define INTERACT_TENSOR_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace interact {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  // Throws DimensionError if data.size() != product(shape).
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor(Shape{}, {value}); }
  // 2-D tensor from nested rows; all rows must have equal length.
  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  // Row-major access for rank-2 tensors.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  // Same data, new shape with identical element count.
  Tensor Reshaped(Shape shape) const;
  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  // The reference is stable for the lifetime of the tape.
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Accumulation targets for the operands of one node during backward.
class GradSink {
 public:
  // Gradient buffer of operand `k`, zero-initialised on first access, or
  // nullptr when that operand does not depend on any leaf.
  Tensor* For(std::size_t k);

 private:
  friend class Tape;
  GradSink(const Tape& tape, const std::vector<int>& inputs,
           std::vector<Tensor>& grads)
      : tape_(tape), inputs_(inputs), grads_(grads) {}

  const Tape& tape_;
  const std::vector<int>& inputs_;
  std::vector<Tensor>& grads_;
};

// Gradient lookup produced by Tape::Backward.
class Gradients {
 public:
  // Zeros shaped like `v` when `v` was not reachable from the loss.
  Tensor operator[](Var v) const;
  const Tensor* Find(Var v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A differentiable input (parameter or probed activation).
  Var Leaf(Tensor value);
  // A value that never receives gradient.
  Var Constant(Tensor value);
  // Appends an operation node. `backward` may be empty for non-differentiable
  // results.
  Var Record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Reverse sweep from a scalar loss. Throws ContractError when `loss` is not
  // a single element or belongs to another tape.
  Gradients Backward(Var loss) const;

  const Tensor& Value(int id) const { return nodes_[id].value; }
  bool NeedsGrad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };

  // deque keeps value references stable while appending.
  std::deque<Node> nodes_;
};

}  // namespace interact

#endif  // INTERACT_TENSOR_H_
