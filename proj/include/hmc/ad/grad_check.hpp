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
// Central-difference gradient checks against the tape's reverse pass.
// Intended for double precision.

#ifndef HMC_AD_GRAD_CHECK_HPP_
#define HMC_AD_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "hmc/ad/tape.hpp"
#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"

namespace hmc::ad {

struct GradCheckOptions {
  double rtol = 1e-3;
  double atol = 1e-5;
  double step = 1e-6;
  // 0 checks every coordinate; otherwise at most this many per array,
  // spread evenly.
  std::size_t max_coords_per_array = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::string worst;  // "<array>[<index>]: analytic=... numeric=..."

  bool passed() const { return failures == 0 && checked > 0; }
};

namespace detail {

inline void Compare(GradCheckReport& report, const std::string& array, std::size_t index,
                    double analytic, double numeric, const GradCheckOptions& opt) {
  const double abs_err = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double rel_err = scale > 0 ? abs_err / scale : 0.0;
  ++report.checked;
  if (abs_err > opt.atol + opt.rtol * scale) ++report.failures;
  if (abs_err > report.max_abs_error) report.max_abs_error = abs_err;
  if (rel_err > report.max_rel_error && abs_err > opt.atol) {
    report.max_rel_error = rel_err;
    report.worst = array + "[" + std::to_string(index) + "]: analytic=" + std::to_string(analytic) +
                   " numeric=" + std::to_string(numeric);
  }
}

inline std::size_t Stride(std::size_t n, const GradCheckOptions& opt) {
  if (opt.max_coords_per_array == 0 || n <= opt.max_coords_per_array) return 1;
  return (n + opt.max_coords_per_array - 1) / opt.max_coords_per_array;
}

template <typename T>
double Scalar(const Tensor<T>& t) {
  if (t.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "grad_check: function is not scalar-valued");
  }
  const double v = static_cast<double>(t[0]);
  if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "grad_check: f(x) not finite");
  return v;
}

}  // namespace detail

// Checks d f / d x where `f` maps a constant input variable to a scalar.
template <typename T>
GradCheckReport GradCheck(const std::function<Var<T>(Tape<T>&, Var<T>)>& f, const Tensor<T>& x,
                          const GradCheckOptions& opt = {}) {
  Tensor<T> analytic;
  {
    Parameter<T> input("x", x.rows(), x.cols());
    input.value = x;
    Tape<T> tape;
    Var<T> out = f(tape, tape.param(input));
    detail::Scalar(out.value());
    tape.backward(out);
    analytic = input.grad;
  }
  auto eval = [&](const Tensor<T>& at) {
    Tape<T> tape(false);
    return detail::Scalar(f(tape, tape.constant(at)).value());
  };
  GradCheckReport report;
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); i += detail::Stride(x.size(), opt)) {
    const T orig = probe[i];
    probe[i] = orig + static_cast<T>(opt.step);
    const double up = eval(probe);
    probe[i] = orig - static_cast<T>(opt.step);
    const double down = eval(probe);
    probe[i] = orig;
    detail::Compare(report, "x", i, static_cast<double>(analytic[i]), (up - down) / (2 * opt.step),
                    opt);
  }
  return report;
}

// Checks d f / d p for every parameter in `params`; `f` must rebuild its
// graph from the current parameter values on each call.
template <typename T>
GradCheckReport GradCheckParameters(const std::function<Var<T>(Tape<T>&)>& f,
                                    const ParameterList<T>& params,
                                    const GradCheckOptions& opt = {}) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<T> tape;
    Var<T> out = f(tape);
    detail::Scalar(out.value());
    tape.backward(out);
  }
  auto eval = [&] {
    Tape<T> tape(false);
    return detail::Scalar(f(tape).value());
  };
  GradCheckReport report;
  for (auto* p : params) {
    const Tensor<T> analytic = p->grad;
    const std::size_t n = p->value.size();
    for (std::size_t i = 0; i < n; i += detail::Stride(n, opt)) {
      const T orig = p->value[i];
      p->value[i] = orig + static_cast<T>(opt.step);
      const double up = eval();
      p->value[i] = orig - static_cast<T>(opt.step);
      const double down = eval();
      p->value[i] = orig;
      detail::Compare(report, p->name, i, static_cast<double>(analytic[i]),
                      (up - down) / (2 * opt.step), opt);
    }
  }
  return report;
}

}  // namespace hmc::ad

#endif  // HMC_AD_GRAD_CHECK_HPP_
