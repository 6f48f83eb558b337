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
// Differentiable operations on rank-2 tape variables.

#ifndef HMC_AD_OPS_HPP_
#define HMC_AD_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hmc/ad/tape.hpp"
#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"

namespace hmc::ad {

namespace detail {

inline void RequireShape(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + detail);
}

template <typename T>
std::string Shapes(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape_string() + " vs " + b.shape_string();
}

template <typename T>
void AccumulateIf(Tape<T>& tape, std::uint32_t i, const Tensor<T>& g) {
  if (tape.requires_grad(i)) tape.grad(i) += g;
}

// out += a * b
template <typename T>
void GemmNN(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    T* o = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a(i, p);
      if (s == T(0)) continue;
      const T* br = &b(p, 0);
      for (std::size_t j = 0; j < m; ++j) o[j] += s * br[j];
    }
  }
}

// out += a * b^T
template <typename T>
void GemmNT(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const T* ar = &a(i, 0);
    for (std::size_t j = 0; j < m; ++j) {
      const T* br = &b(j, 0);
      T s = T(0);
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      out(i, j) += s;
    }
  }
}

// out += a^T * b
template <typename T>
void GemmTN(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t p = 0; p < n; ++p) {
    const T* br = &b(p, 0);
    for (std::size_t i = 0; i < k; ++i) {
      const T s = a(p, i);
      if (s == T(0)) continue;
      T* o = &out(i, 0);
      for (std::size_t j = 0; j < m; ++j) o[j] += s * br[j];
    }
  }
}

}  // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::RequireShape(av.cols() == bv.rows(), "matmul", detail::Shapes(av, bv));
  Tensor<T> out(av.rows(), bv.cols());
  detail::GemmNN(av, bv, out);
  const auto ai = a.index, bi = b.index;
  return a.tape->record("matmul", std::move(out), {a, b}, [ai, bi](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ai)) detail::GemmNT(g, t.value(bi), t.grad(ai));
    if (t.requires_grad(bi)) detail::GemmTN(t.value(ai), g, t.grad(bi));
  });
}

// a * b^T
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::RequireShape(av.cols() == bv.cols(), "matmul_nt", detail::Shapes(av, bv));
  Tensor<T> out(av.rows(), bv.rows());
  detail::GemmNT(av, bv, out);
  const auto ai = a.index, bi = b.index;
  return a.tape->record("matmul_nt", std::move(out), {a, b},
                        [ai, bi](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          if (t.requires_grad(ai)) detail::GemmNN(g, t.value(bi), t.grad(ai));
                          if (t.requires_grad(bi)) detail::GemmTN(g, t.value(ai), t.grad(bi));
                        });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  const auto& av = a.value();
  Tensor<T> out(av.cols(), av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
  const auto ai = a.index;
  return a.tape->record("transpose", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
  });
}

// Elementwise sum. `b` may also be a 1 x n row broadcast over the rows of `a`.
template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  const bool broadcast = !av.same_shape(bv);
  detail::RequireShape(!broadcast || (bv.rows() == 1 && bv.cols() == av.cols()), "add",
                       detail::Shapes(av, bv));
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[broadcast ? i % av.cols() : i];
  const auto ai = a.index, bi = b.index;
  return a.tape->record("add", std::move(out), {a, b},
                        [ai, bi, broadcast](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          detail::AccumulateIf(t, ai, g);
                          if (!t.requires_grad(bi)) return;
                          auto& gb = t.grad(bi);
                          if (!broadcast) {
                            gb += g;
                            return;
                          }
                          for (std::size_t i = 0; i < g.size(); ++i) gb[i % g.cols()] += g[i];
                        });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::RequireShape(av.same_shape(bv), "sub", detail::Shapes(av, bv));
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const auto ai = a.index, bi = b.index;
  return a.tape->record("sub", std::move(out), {a, b}, [ai, bi](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    detail::AccumulateIf(t, ai, g);
    if (!t.requires_grad(bi)) return;
    auto& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::RequireShape(av.same_shape(bv), "mul", detail::Shapes(av, bv));
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const auto ai = a.index, bi = b.index;
  return a.tape->record("mul", std::move(out), {a, b}, [ai, bi](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      const auto& bv = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      const auto& av = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x *= s;
  const auto ai = a.index;
  return a.tape->record("scale", std::move(out), {a}, [ai, s](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

// axis 0 stacks rows, axis 1 joins columns.
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int axis) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat: no inputs");
  if (axis != 0 && axis != 1) throw Error(ErrorCode::kInvalidArgument, "concat: axis must be 0 or 1");
  Tape<T>* tape = parts.front().tape;
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (axis == 0) {
      detail::RequireShape(v.cols() == parts.front().cols(), "concat", "column counts differ");
      rows += v.rows();
      cols = v.cols();
    } else {
      detail::RequireShape(v.rows() == parts.front().rows(), "concat", "row counts differ");
      cols += v.cols();
      rows = v.rows();
    }
  }
  Tensor<T> out(rows, cols);
  std::vector<std::uint32_t> ids;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) {
        if (axis == 0) {
          out(offset + i, j) = v(i, j);
        } else {
          out(i, offset + j) = v(i, j);
        }
      }
    offset += axis == 0 ? v.rows() : v.cols();
    ids.push_back(p.index);
  }
  return tape->record("concat", std::move(out), parts, [ids, axis](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    std::size_t offset = 0;
    for (auto id : ids) {
      const auto& v = t.value(id);
      if (t.requires_grad(id)) {
        auto& gi = t.grad(id);
        for (std::size_t i = 0; i < v.rows(); ++i)
          for (std::size_t j = 0; j < v.cols(); ++j)
            gi(i, j) += axis == 0 ? g(offset + i, j) : g(i, offset + j);
      }
      offset += axis == 0 ? v.rows() : v.cols();
    }
  });
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t start, std::size_t count) {
  const auto& av = a.value();
  detail::RequireShape(start + count <= av.rows(), "slice_rows", "range exceeds " + av.shape_string());
  Tensor<T> out(count, av.cols());
  std::copy_n(av.values().begin() + static_cast<std::ptrdiff_t>(start * av.cols()), out.size(),
              out.values().begin());
  const auto ai = a.index;
  return a.tape->record("slice_rows", std::move(out), {a},
                        [ai, start](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          auto& ga = t.grad(ai);
                          const std::size_t base = start * ga.cols();
                          for (std::size_t i = 0; i < g.size(); ++i) ga[base + i] += g[i];
                        });
}

template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t count) {
  const auto& av = a.value();
  detail::RequireShape(start + count <= av.cols(), "slice_cols", "range exceeds " + av.shape_string());
  Tensor<T> out(av.rows(), count);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
  const auto ai = a.index;
  return a.tape->record("slice_cols", std::move(out), {a},
                        [ai, start](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          auto& ga = t.grad(ai);
                          for (std::size_t i = 0; i < g.rows(); ++i)
                            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, start + j) += g(i, j);
                        });
}

// Row-major reinterpretation; reshape(x, 1, x.size()) flattens.
template <typename T>
Var<T> reshape(Var<T> a, std::size_t rows, std::size_t cols) {
  const auto& av = a.value();
  detail::RequireShape(rows * cols == av.size(), "reshape",
                       av.shape_string() + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  Tensor<T> out(rows, cols, av.data());
  const auto ai = a.index;
  return a.tape->record("reshape", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> flatten(Var<T> a) {
  return reshape(a, 1, a.value().size());
}

template <typename T>
T SigmoidScalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = SigmoidScalar(x);
  const auto ai = a.index;
  return a.tape->record("sigmoid", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> relu(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = std::max(x, T(0));
  const auto ai = a.index;
  return a.tape->record("relu", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ai);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > T(0)) ga[i] += g[i];
    }
  });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = std::tanh(x);
  const auto ai = a.index;
  return a.tape->record("tanh", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var<T> log(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = std::log(x);
  const auto ai = a.index;
  return a.tape->record("log", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ai);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

// Values outside [lo, hi] are pinned and pass no gradient.
template <typename T>
Var<T> clamp(Var<T> a, T lo, T hi) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = std::clamp(x, lo, hi);
  const auto ai = a.index;
  return a.tape->record("clamp", std::move(out), {a}, [ai, lo, hi](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ai);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    }
  });
}

// Row-wise softmax. When `column_mask` is non-empty, columns with mask 0 get
// probability exactly 0 and receive no gradient; every row must keep at
// least one unmasked column.
template <typename T>
Var<T> softmax_rows(Var<T> a, std::span<const std::uint8_t> column_mask = {}) {
  const auto& av = a.value();
  const bool masked = !column_mask.empty();
  detail::RequireShape(!masked || column_mask.size() == av.cols(), "softmax_rows",
                       "mask length " + std::to_string(column_mask.size()) + " for " +
                           av.shape_string());
  if (masked && std::none_of(column_mask.begin(), column_mask.end(), [](auto m) { return m != 0; })) {
    throw Error(ErrorCode::kInvalidArgument, "softmax_rows: every column is masked");
  }
  Tensor<T> out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < av.cols(); ++j) {
      if (!masked || column_mask[j]) mx = std::max(mx, av(i, j));
    }
    T sum = T(0);
    for (std::size_t j = 0; j < av.cols(); ++j) {
      const T e = (!masked || column_mask[j]) ? std::exp(av(i, j) - mx) : T(0);
      out(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) /= sum;
  }
  const auto ai = a.index;
  return a.tape->record("softmax_rows", std::move(out), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      T dot = T(0);
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

// Per-row standardization (no affine part): (x - mean) / sqrt(var + eps).
template <typename T>
Var<T> layer_norm(Var<T> a, T eps = T(1e-5)) {
  const auto& av = a.value();
  const std::size_t n = av.cols();
  Tensor<T> out(av.rows(), n);
  std::vector<T> inv_std(av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    T mean = T(0);
    for (std::size_t j = 0; j < n; ++j) mean += av(i, j);
    mean /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) var += (av(i, j) - mean) * (av(i, j) - mean);
    var /= static_cast<T>(n);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out(i, j) = (av(i, j) - mean) * inv_std[i];
  }
  const auto ai = a.index;
  return a.tape->record("layer_norm", std::move(out), {a},
                        [ai, inv_std](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          const auto& y = t.value(self);
                          auto& ga = t.grad(ai);
                          const T n = static_cast<T>(y.cols());
                          for (std::size_t i = 0; i < y.rows(); ++i) {
                            T gsum = T(0), gy = T(0);
                            for (std::size_t j = 0; j < y.cols(); ++j) {
                              gsum += g(i, j);
                              gy += g(i, j) * y(i, j);
                            }
                            for (std::size_t j = 0; j < y.cols(); ++j) {
                              ga(i, j) += inv_std[i] * (g(i, j) - gsum / n - y(i, j) * gy / n);
                            }
                          }
                        });
}

// Column means: r x c -> 1 x c.
template <typename T>
Var<T> mean_rows(Var<T> a) {
  const auto& av = a.value();
  detail::RequireShape(av.rows() > 0, "mean_rows", "no rows");
  Tensor<T> out(1, av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  const T inv = T(1) / static_cast<T>(av.rows());
  for (auto& x : out.values()) x *= inv;
  const auto ai = a.index;
  return a.tape->record("mean_rows", std::move(out), {a}, [ai, inv](Tape<T>& t, std::uint32_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j) * inv;
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T s = T(0);
  for (T x : a.value().values()) s += x;
  const auto ai = a.index;
  return a.tape->record("sum", Tensor<T>(1, 1, s), {a}, [ai](Tape<T>& t, std::uint32_t self) {
    const T g = t.grad(self)[0];
    for (auto& x : t.grad(ai).values()) x += g;
  });
}

template <typename T>
Var<T> l2_normalize_rows(Var<T> a, T eps = T(1e-12)) {
  const auto& av = a.value();
  Tensor<T> out = av;
  std::vector<T> norms(av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    T ss = T(0);
    for (T x : av.row(i)) ss += x * x;
    norms[i] = std::max(std::sqrt(ss), eps);
    for (auto& x : out.row(i)) x /= norms[i];
  }
  const auto ai = a.index;
  return a.tape->record("l2_normalize_rows", std::move(out), {a},
                        [ai, norms](Tape<T>& t, std::uint32_t self) {
                          const auto& g = t.grad(self);
                          const auto& y = t.value(self);
                          auto& ga = t.grad(ai);
                          for (std::size_t i = 0; i < y.rows(); ++i) {
                            T dot = T(0);
                            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                            for (std::size_t j = 0; j < y.cols(); ++j) {
                              ga(i, j) += (g(i, j) - y(i, j) * dot) / norms[i];
                            }
                          }
                        });
}

// Embedding lookup: rows `ids` of `table`. Gradients are scattered straight
// into table.grad.
template <typename T>
Var<T> gather_rows(Tape<T>& tape, Parameter<T>& table, std::span<const std::int32_t> ids) {
  const auto& tv = table.value;
  Tensor<T> out(ids.size(), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw Error(ErrorCode::kIndexOutOfRange, "gather_rows: id " + std::to_string(ids[i]));
    }
    std::copy_n(tv.row(static_cast<std::size_t>(ids[i])).begin(), tv.cols(), out.row(i).begin());
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  Parameter<T>* target = &table;
  return tape.record_source("gather_rows", std::move(out),
                            [saved, target](Tape<T>& t, std::uint32_t self) {
                              const auto& g = t.grad(self);
                              for (std::size_t i = 0; i < saved.size(); ++i) {
                                auto dst = target->grad.row(static_cast<std::size_t>(saved[i]));
                                auto src = g.row(i);
                                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                              }
                            });
}

}  // namespace hmc::ad

#endif  // HMC_AD_OPS_HPP_
