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

#ifndef HMC_AD_ADAM_HPP_
#define HMC_AD_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"

namespace hmc::ad {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of `param` in place. `step` is the 1-based
// count of updates including this one.
template <typename T>
void AdamStep(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
              std::uint64_t step, const AdamHyper& hyper) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam: parameter/gradient/moment sizes differ");
  }
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * g;
    const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = hyper.lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps);
    param[i] = static_cast<T>(static_cast<double>(param[i]) - update);
  }
}

// Adam over a parameter list. Moments are matched to parameters by position
// and allocated on the first step.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  void step(const ParameterList<T>& params, double lr) {
    if (first_moments_.empty()) {
      for (auto* p : params) {
        first_moments_.emplace_back(p->value.rows(), p->value.cols());
        second_moments_.emplace_back(p->value.rows(), p->value.cols());
      }
    }
    if (params.size() != first_moments_.size()) {
      throw Error(ErrorCode::kShapeMismatch, "adam: parameter list changed size");
    }
    ++steps_;
    AdamHyper h = hyper_;
    h.lr = lr;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto* p = params[i];
      if (!p->value.same_shape(first_moments_[i])) {
        throw Error(ErrorCode::kShapeMismatch, "adam: shape of '" + p->name + "' changed");
      }
      AdamStep<T>(p->value.values(), p->grad.values(), first_moments_[i].values(),
                  second_moments_[i].values(), steps_, h);
    }
  }

  static void zero_grad(const ParameterList<T>& params) {
    for (auto* p : params) p->zero_grad();
  }

  std::uint64_t steps() const { return steps_; }
  const AdamHyper& hyper() const { return hyper_; }
  std::vector<Tensor<T>>& first_moments() { return first_moments_; }
  std::vector<Tensor<T>>& second_moments() { return second_moments_; }

  // Restores saved state; moment lists must match the parameter list.
  void restore(std::uint64_t steps, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
    steps_ = steps;
    first_moments_ = std::move(m);
    second_moments_ = std::move(v);
  }

 private:
  AdamHyper hyper_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor<T>> first_moments_;
  std::vector<Tensor<T>> second_moments_;
};

}  // namespace hmc::ad

#endif  // HMC_AD_ADAM_HPP_
