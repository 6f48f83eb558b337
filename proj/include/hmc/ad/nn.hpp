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

#ifndef HMC_AD_NN_HPP_
#define HMC_AD_NN_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hmc/ad/ops.hpp"
#include "hmc/ad/tape.hpp"
#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"

namespace hmc::ad {

using Rng = std::mt19937_64;

// Glorot-uniform fill.
template <typename T>
void InitGlorot(Parameter<T>& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& x : p.value.values()) x = static_cast<T>(dist(rng));
}

template <typename T>
void InitNormal(Parameter<T>& p, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& x : p.value.values()) x = static_cast<T>(dist(rng));
}

enum class Activation { kRelu, kTanh, kIdentity };

template <typename T>
Var<T> Apply(Activation act, Var<T> x) {
  switch (act) {
    case Activation::kRelu: return relu(x);
    case Activation::kTanh: return tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

template <typename T>
struct Linear {
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
      : weight(name + ".w", in, out), bias(name + ".b", 1, out) {
    InitGlorot(weight, rng);
  }

  std::size_t in_features() const { return weight.value.rows(); }
  std::size_t out_features() const { return weight.value.cols(); }

  Var<T> forward(Tape<T>& tape, Var<T> x) {
    if (x.cols() != in_features()) {
      throw Error(ErrorCode::kShapeMismatch, weight.name + ": input " + x.value().shape_string() +
                                                 ", expected width " +
                                                 std::to_string(in_features()));
    }
    return add(matmul(x, tape.param(weight)), tape.param(bias));
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // 1 x out
};

// Affine layers with `hidden` activation between them; the last layer is
// linear and the caller applies any output nonlinearity.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& dims, Activation hidden, Rng& rng)
      : hidden_(hidden) {
    if (dims.size() < 2) throw Error(ErrorCode::kInvalidArgument, name + ": needs >= 2 widths");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      layers_.emplace_back(name + "." + std::to_string(i), dims[i], dims[i + 1], rng);
    }
  }

  Var<T> forward(Tape<T>& tape, Var<T> x) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i].forward(tape, x);
      if (i + 1 < layers_.size()) x = Apply(hidden_, x);
    }
    return x;
  }

  void collect(ParameterList<T>& out) {
    for (auto& l : layers_) l.collect(out);
  }

  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }
  std::vector<Linear<T>>& layers() { return layers_; }
  const std::vector<Linear<T>>& layers() const { return layers_; }

 private:
  Activation hidden_ = Activation::kRelu;
  std::vector<Linear<T>> layers_;
};

// Scaled dot-product attention over `heads` heads of width d / heads, heads
// concatenated and passed through an output projection. No dropout.
template <typename T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, std::size_t d, std::size_t heads, Rng& rng)
      : heads_(heads),
        query(name + ".q", d, d, rng),
        key(name + ".k", d, d, rng),
        value(name + ".v", d, d, rng),
        output(name + ".o", d, d, rng) {
    if (heads == 0 || d % heads != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  name + ": width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
    }
  }

  std::size_t width() const { return query.in_features(); }
  std::size_t heads() const { return heads_; }

  // q: r x d, k and v: s x d -> r x d. `key_mask` (length s, optional)
  // excludes keys with mask 0 from every query's attention.
  Var<T> forward(Tape<T>& tape, Var<T> q, Var<T> k, Var<T> v,
                 std::span<const std::uint8_t> key_mask = {}) {
    const std::size_t d = width();
    if (q.cols() != d || k.cols() != d || v.cols() != d || k.rows() != v.rows()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "attention: q " + q.value().shape_string() + ", k " + k.value().shape_string() +
                      ", v " + v.value().shape_string() + ", width " + std::to_string(d));
    }
    Var<T> qp = query.forward(tape, q);
    Var<T> kp = key.forward(tape, k);
    Var<T> vp = value.forward(tape, v);
    const std::size_t dh = d / heads_;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<Var<T>> outs;
    outs.reserve(heads_);
    for (std::size_t h = 0; h < heads_; ++h) {
      Var<T> qh = heads_ == 1 ? qp : slice_cols(qp, h * dh, dh);
      Var<T> kh = heads_ == 1 ? kp : slice_cols(kp, h * dh, dh);
      Var<T> vh = heads_ == 1 ? vp : slice_cols(vp, h * dh, dh);
      Var<T> scores = scale(matmul_nt(qh, kh), inv_sqrt);
      outs.push_back(matmul(softmax_rows(scores, key_mask), vh));
    }
    Var<T> joined = heads_ == 1 ? outs.front() : concat(outs, 1);
    return output.forward(tape, joined);
  }

  void collect(ParameterList<T>& out) {
    query.collect(out);
    key.collect(out);
    value.collect(out);
    output.collect(out);
  }

 private:
  std::size_t heads_ = 1;

 public:
  Linear<T> query;
  Linear<T> key;
  Linear<T> value;
  Linear<T> output;
};

}  // namespace hmc::ad

#endif  // HMC_AD_NN_HPP_
