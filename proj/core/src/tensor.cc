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

#include "interact/tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "interact/errors.h"

namespace interact {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (NumElements(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + ShapeToString(shape_) +
                         " does not hold " + std::to_string(data_.size()) +
                         " values");
  }
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in FromRows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + ShapeToString(shape_) + " to " +
                         ShapeToString(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ContractError("value() on an unbound Var");
  return tape_->Value(id_);
}

Tensor* GradSink::For(std::size_t k) {
  const int id = inputs_.at(k);
  if (!tape_.NeedsGrad(id)) return nullptr;
  Tensor& g = grads_[id];
  if (g.shape() != tape_.Value(id).shape() || g.empty() != tape_.Value(id).empty()) {
    g = Tensor(tape_.Value(id).shape(), 0.0);
  }
  return &g;
}

Tensor Gradients::operator[](Var v) const {
  if (const Tensor* g = Find(v)) return *g;
  return Tensor(v.shape(), 0.0);
}

const Tensor* Gradients::Find(Var v) const {
  if (v.tape() != tape_ || v.id() < 0 ||
      static_cast<std::size_t>(v.id()) >= grads_.size()) {
    return nullptr;
  }
  const Tensor& g = grads_[v.id()];
  if (g.shape() != v.shape() || (g.empty() && !v.value().empty())) return nullptr;
  return &g;
}

Var Tape::Leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::Constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::Record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape() != this) {
      throw ContractError("operand recorded on a different tape");
    }
    node.inputs.push_back(v.id());
    node.needs_grad = node.needs_grad || nodes_[v.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  node.needs_grad = node.needs_grad && static_cast<bool>(node.backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Gradients Tape::Backward(Var loss) const {
  if (loss.tape() != this) {
    throw ContractError("loss does not belong to this tape");
  }
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        ShapeToString(loss.shape()));
  }
  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.grads_[loss.id()] = Tensor(loss.shape(), 1.0);
  for (int i = loss.id(); i >= 0; --i) {
    const Node& node = nodes_[i];
    Tensor& g = out.grads_[i];
    if (!node.needs_grad || !node.backward || g.shape() != node.value.shape() ||
        (g.empty() && !node.value.empty())) {
      continue;
    }
    GradSink sink(*this, node.inputs, out.grads_);
    node.backward(g, sink);
  }
  return out;
}

}  // namespace interact
