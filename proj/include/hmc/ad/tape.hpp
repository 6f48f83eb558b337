// Copyright 2026 The hmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Define-by-run reverse-mode tape.
//
// Every operation appends a node holding its forward value and a backward
// closure. Nodes are appended after their inputs, so creation order is a
// topological order and backward() is a single reverse sweep. A tape belongs
// to one thread; build a fresh tape per forward/backward pass.

#ifndef HMC_AD_TAPE_HPP_
#define HMC_AD_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"

namespace hmc::ad {

template <typename T>
class Tape;

// Handle to a node on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t index = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

  // With grad disabled the tape only evaluates; nothing is retained for a
  // backward pass.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) {
    return push("constant", std::move(value), false, nullptr, {});
  }

  Var<T> param(Parameter<T>& p) {
    return push("param", p.value, grad_enabled_, &p, {});
  }

  // Appends an operation result. `fn` runs during backward() only when the
  // node received a gradient and some input requires one.
  Var<T> record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      check_owner(in, op);
      needs = needs || nodes_[in.index].requires_grad;
    }
    return push(op, std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  Var<T> record(const char* op, Tensor<T> value, const std::vector<Var<T>>& inputs,
                BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      check_owner(in, op);
      needs = needs || nodes_[in.index].requires_grad;
    }
    return push(op, std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  // A node without tape inputs whose backward writes straight into external
  // storage (e.g. rows of an embedding table).
  Var<T> record_source(const char* op, Tensor<T> value, BackwardFn fn) {
    return push(op, std::move(value), grad_enabled_, nullptr,
                grad_enabled_ ? std::move(fn) : BackwardFn{});
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.index).value; }
  const Tensor<T>& value(std::uint32_t i) const { return nodes_.at(i).value; }
  bool requires_grad(std::uint32_t i) const { return nodes_[i].requires_grad; }
  bool requires_grad(Var<T> v) const { return nodes_[v.index].requires_grad; }

  // Gradient buffer of node i, zero-initialized on first access.
  Tensor<T>& grad(std::uint32_t i) {
    Node& n = nodes_[i];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.rows(), n.value.cols());
    return n.grad;
  }
  const Tensor<T>* grad_if_any(Var<T> v) const {
    const Node& n = nodes_.at(v.index);
    return n.grad.empty() ? nullptr : &n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards, accumulating
  // into the Parameter::grad of every parameter reached.
  void backward(Var<T> loss) {
    check_owner(loss, "backward");
    if (value(loss).size() != 1) {
      throw Error(ErrorCode::kShapeMismatch,
                  "backward() needs a scalar, got " + value(loss).shape_string());
    }
    if (!grad_enabled_) throw Error(ErrorCode::kInvalidArgument, "tape has grad disabled");
    grad(loss.index)[0] += T(1);
    visits_ = 0;
    for (std::uint32_t i = loss.index + 1; i-- > 0;) {
      ++visits_;
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, i);
      if (n.param != nullptr) n.param->grad += n.grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t backward_visits() const { return visits_; }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    const char* op;
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad;
    Parameter<T>* param;
    BackwardFn backward;
  };

  void check_owner(Var<T> v, const char* op) const {
    if (v.tape != this || v.index >= nodes_.size()) {
      throw Error(ErrorCode::kInvalidArgument, std::string(op) + ": variable from another tape");
    }
  }

  Var<T> push(const char* op, Tensor<T> value, bool requires_grad, Parameter<T>* param,
              BackwardFn fn) {
    if (!value.all_finite()) {
      throw Error(ErrorCode::kNonFiniteValue, std::string(op) + " produced a non-finite value");
    }
    nodes_.push_back(Node{op, std::move(value), {}, requires_grad && grad_enabled_, param,
                          std::move(fn)});
    return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

}  // namespace hmc::ad

#endif  // HMC_AD_TAPE_HPP_
