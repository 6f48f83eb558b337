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
// Sigmoid pairwise contrastive objective and the pretraining loop.
//
// A pair (s, s') of projected unit vectors scores x = s.s' / alpha. A
// positive pair contributes log sigmoid(x), a negative pair
// log(1 - sigmoid(x)) = log sigmoid(-x). For a batch B over L levels,
//
//   L_cl = 1/(|B| L) sum_i sum_l 1/|V_il^+| (sum_pos + sum_neg)
//
// Levels without anchor labels contribute nothing. Training minimizes
// -L_cl. The projection head exists only for pretraining; the encoder
// weights are what gets handed to the classifier.

#ifndef HMC_HMCL_CONTRASTIVE_HPP_
#define HMC_HMCL_CONTRASTIVE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hmc/ad/adam.hpp"
#include "hmc/ad/nn.hpp"
#include "hmc/ad/ops.hpp"
#include "hmc/ad/tape.hpp"
#include "hmc/corpus.hpp"
#include "hmc/encoder.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"
#include "hmc/hmcl/sampling.hpp"
#include "hmc/metrics.hpp"

namespace hmc::hmcl {

struct HmclConfig {
  Strategy strategy = Strategy::kLevel;
  double alpha = 0.1;
  std::vector<std::size_t> repeats_per_level = {10, 20, 50};
  std::size_t batch_size = 8;
  double lr = 1e-5;
  double decay = 0.8;
  std::size_t decay_every_batches = 4000;
  std::size_t epochs = 1;
  std::size_t proj_hidden = 64;
  std::size_t proj_dim = 32;

  void validate() const {
    if (!(alpha > 0)) throw Error(ErrorCode::kInvalidArgument, "contrastive alpha must be > 0");
    if (repeats_per_level.empty()) throw Error(ErrorCode::kInvalidArgument, "repeats_per_level is empty");
    for (auto r : repeats_per_level) {
      if (r == 0) throw Error(ErrorCode::kInvalidArgument, "repeats must be positive");
    }
    if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    if (!(lr >= 0)) throw Error(ErrorCode::kInvalidArgument, "lr must be >= 0");
    if (proj_hidden == 0 || proj_dim == 0) throw Error(ErrorCode::kInvalidArgument, "projection widths must be >= 1");
  }
};

// flatten(h0) -> hidden (ReLU) -> proj_dim -> unit length.
template <typename T>
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(std::size_t in, std::size_t hidden, std::size_t out, ad::Rng& rng)
      : mlp("hmcl.proj", {in, hidden, out}, ad::Activation::kRelu, rng) {}

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> h0) {
    return ad::l2_normalize_rows(mlp.forward(tape, ad::flatten(h0)));
  }
  void collect(ad::ParameterList<T>& out) { mlp.collect(out); }

  ad::Mlp<T> mlp;
};

enum class Polarity { kPositive, kNegative };

inline void RequireUnit(std::span<const double> s, const char* what) {
  double n = 0.0;
  for (double x : s) n += x * x;
  if (std::abs(std::sqrt(n) - 1.0) > 1e-4) {
    throw Error(ErrorCode::kNonUnitInput, std::string(what) + " has norm " + std::to_string(std::sqrt(n)));
  }
}

// Sigmoid(s.s'/alpha) for a positive pair, 1 - Sigmoid(s.s'/alpha) otherwise.
inline double pair_probability(std::span<const double> s, std::span<const double> s2, Polarity p,
                               double alpha) {
  if (s.size() != s2.size()) throw Error(ErrorCode::kShapeMismatch, "pair_probability: widths differ");
  if (!(alpha > 0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 0");
  RequireUnit(s, "s");
  RequireUnit(s2, "s'");
  const double x = std::inner_product(s.begin(), s.end(), s2.begin(), 0.0) / alpha;
  const double pos = 1.0 / (1.0 + std::exp(-x));
  return p == Polarity::kPositive ? pos : 1.0 - pos;
}

// log sigmoid(y), stable for large |y|.
inline double LogSigmoid(double y) {
  return y >= 0 ? -std::log1p(std::exp(-y)) : y - std::log1p(std::exp(y));
}

struct WeightedPair {
  std::size_t a = 0;  // rows of the stacked projection matrix
  std::size_t b = 0;
  double sign = 1.0;  // +1 positive, -1 negative
  double weight = 0.0;
};

// sum_k w_k log sigmoid(sign_k s_a.s_b / alpha) over rows of `s`.
template <typename T>
ad::Var<T> weighted_pair_log_likelihood(ad::Var<T> s, std::vector<WeightedPair> pairs, double alpha) {
  const auto& sv = s.value();
  const std::size_t p = sv.cols();
  auto dot = [p](const ad::Tensor<T>& m, std::size_t a, std::size_t b) {
    double d = 0.0;
    for (std::size_t k = 0; k < p; ++k) d += static_cast<double>(m(a, k)) * static_cast<double>(m(b, k));
    return d;
  };
  double total = 0.0;
  for (const auto& pr : pairs) {
    if (pr.a >= sv.rows() || pr.b >= sv.rows()) throw Error(ErrorCode::kIndexOutOfRange, "pair row");
    total += pr.weight * LogSigmoid(pr.sign * dot(sv, pr.a, pr.b) / alpha);
  }
  const auto si = s.index;
  return s.tape->record(
      "pair_log_likelihood", ad::Tensor<T>(1, 1, static_cast<T>(total)), {s},
      [si, pairs = std::move(pairs), alpha, p, dot](ad::Tape<T>& t, std::uint32_t self) {
        const double up = static_cast<double>(t.grad(self)[0]);
        const auto& sv = t.value(si);
        auto& g = t.grad(si);
        for (const auto& pr : pairs) {
          const double y = pr.sign * dot(sv, pr.a, pr.b) / alpha;
          // d/dy log sigmoid(y) = sigmoid(-y)
          const double c = up * pr.weight * pr.sign / alpha / (1.0 + std::exp(y));
          for (std::size_t k = 0; k < p; ++k) {
            g(pr.a, k) += static_cast<T>(c * static_cast<double>(sv(pr.b, k)));
            g(pr.b, k) += static_cast<T>(c * static_cast<double>(sv(pr.a, k)));
          }
        }
      });
}

// Projection of `records` (each encoded once) stacked into rows, plus a map
// from record index to row.
template <typename T>
struct ProjectedRecords {
  ad::Var<T> matrix;
  std::map<std::size_t, std::size_t> row_of;
};

template <typename T>
ProjectedRecords<T> project_records(ad::Tape<T>& tape, Encoder<T>& encoder, ProjectionHead<T>& head,
                                    const Corpus& corpus, std::vector<std::size_t> records) {
  std::sort(records.begin(), records.end());
  records.erase(std::unique(records.begin(), records.end()), records.end());
  ProjectedRecords<T> out;
  std::vector<ad::Var<T>> rows;
  for (std::size_t i : records) {
    out.row_of[i] = rows.size();
    rows.push_back(head.forward(tape, encoder.encode(tape, corpus[i])));
  }
  out.matrix = rows.size() == 1 ? rows.front() : ad::concat(rows, 0);
  return out;
}

// L_cl for a sampled batch (a value <= 0).
template <typename T>
ad::Var<T> contrastive_loss(ad::Tape<T>& tape, Encoder<T>& encoder, ProjectionHead<T>& head,
                            const Corpus& corpus, const ContrastiveBatch& batch, double alpha) {
  if (batch.anchors.empty()) throw Error(ErrorCode::kEmptyBatch, "contrastive batch is empty");
  if (!(alpha > 0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 0");
  std::vector<std::size_t> needed;
  for (const auto& a : batch.anchors) {
    needed.push_back(a.anchor);
    for (const auto& lv : a.levels) {
      for (const auto& p : lv.positives) needed.push_back(p.instance);
      for (const auto& n : lv.negatives) needed.push_back(n.instance);
    }
  }
  auto proj = project_records(tape, encoder, head, corpus, std::move(needed));
  const double scale_b = 1.0 / (static_cast<double>(batch.anchors.size()) * batch.depth);
  std::vector<WeightedPair> pairs;
  for (const auto& a : batch.anchors) {
    const std::size_t ra = proj.row_of.at(a.anchor);
    for (const auto& lv : a.levels) {
      if (lv.anchor_label_count == 0) continue;
      const double w = scale_b / static_cast<double>(lv.anchor_label_count);
      for (const auto& p : lv.positives) pairs.push_back({ra, proj.row_of.at(p.instance), 1.0, w});
      for (const auto& n : lv.negatives) pairs.push_back({ra, proj.row_of.at(n.instance), -1.0, w});
    }
  }
  return weighted_pair_log_likelihood(proj.matrix, std::move(pairs), alpha);
}

struct SpaceDiagnostics {
  double alignment = 0.0;
  double uniformity = 0.0;
  std::vector<double> alignment_per_level;
};

// The encoder space (unit-normalized flatten(h0), the representation the
// classifier consumes) and the projection-head output space.
struct EmbeddingDiagnostics {
  SpaceDiagnostics encoder;
  SpaceDiagnostics projection;
};

struct DiagnosticsOptions {
  double tau = 2.0;
  std::size_t alignment_pairs = 1000;
  std::uint64_t seed = 0;
};

template <typename T>
metrics::Embeddings encoder_embeddings(Encoder<T>& encoder, const Corpus& corpus) {
  metrics::Embeddings out;
  out.reserve(corpus.size());
  for (const auto& r : corpus.records()) {
    ad::Tape<T> tape(false);
    const auto& v = ad::l2_normalize_rows(ad::flatten(encoder.encode(tape, r))).value();
    out.emplace_back(v.values().begin(), v.values().end());
  }
  return out;
}

template <typename T>
metrics::Embeddings project_all(Encoder<T>& encoder, ProjectionHead<T>& head, const Corpus& corpus) {
  metrics::Embeddings out;
  out.reserve(corpus.size());
  for (const auto& r : corpus.records()) {
    ad::Tape<T> tape(false);
    const auto& v = head.forward(tape, encoder.encode(tape, r)).value();
    out.emplace_back(v.values().begin(), v.values().end());
  }
  return out;
}

inline SpaceDiagnostics DiagnoseEmbeddings(const Corpus& corpus, const metrics::Embeddings& emb,
                                           const DiagnosticsOptions& opt) {
  SpaceDiagnostics d;
  const auto a = metrics::Alignment(corpus, emb, opt.alignment_pairs, opt.seed);
  d.alignment = a.total;
  d.alignment_per_level = a.per_level;
  d.uniformity = metrics::Uniformity(emb, opt.tau, opt.seed);
  return d;
}

template <typename T>
EmbeddingDiagnostics Diagnose(Encoder<T>& encoder, ProjectionHead<T>& head, const Corpus& corpus,
                              const DiagnosticsOptions& opt) {
  return {DiagnoseEmbeddings(corpus, encoder_embeddings(encoder, corpus), opt),
          DiagnoseEmbeddings(corpus, project_all(encoder, head, corpus), opt)};
}

struct PretrainReport {
  EmbeddingDiagnostics before;
  EmbeddingDiagnostics after;
  std::size_t batches = 0;
  std::vector<double> batch_objective;  // L_cl per batch
  SamplingCounters counters;
};

// Adam on -L_cl over the encoder and projection head. Anchors are the
// records with at least one label, shuffled per epoch from (seed, epoch).
template <typename T>
PretrainReport pretrain(Encoder<T>& encoder, ProjectionHead<T>& head, const Corpus& corpus,
                        const HmclConfig& cfg, std::uint64_t seed, const DiagnosticsOptions& diag,
                        const std::function<void(std::size_t, double)>& on_batch = {}) {
  cfg.validate();
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].labels.popcount() > 0) anchors.push_back(i);
  }
  if (anchors.empty()) throw Error(ErrorCode::kEmptyBatch, "no labelled records to anchor on");

  PretrainReport report;
  report.before = Diagnose(encoder, head, corpus, diag);
  ad::ParameterList<T> params;
  encoder.collect(params);
  head.collect(params);
  ad::Adam<T> adam;
  NegativeSampler sampler(corpus, cfg.strategy);
  Rng sample_rng(DeriveSeed(seed, "hmcl.sampler"));
  const std::size_t every = std::max<std::size_t>(cfg.decay_every_batches, 1);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = anchors;
    Rng shuffle_rng(DeriveSeed(seed, "hmcl.shuffle." + std::to_string(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(b),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + cfg.batch_size)));
      ContrastiveBatch batch = build_batch(sampler, ids, cfg.repeats_per_level, sample_rng);
      report.counters += batch.counters;
      ad::Adam<T>::zero_grad(params);
      double value = 0.0;
      try {
        ad::Tape<T> tape;
        ad::Var<T> l_cl = contrastive_loss(tape, encoder, head, corpus, batch, cfg.alpha);
        value = static_cast<double>(l_cl.value()[0]);
        tape.backward(ad::scale(l_cl, T(-1)));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFiniteValue) throw;
        throw Error(ErrorCode::kNonFiniteLoss, "pretraining batch " + std::to_string(report.batches) + ": " + e.what());
      }
      const double lr = cfg.lr * std::pow(cfg.decay, static_cast<double>(report.batches / every));
      adam.step(params, lr);
      report.batch_objective.push_back(value);
      if (on_batch) on_batch(report.batches, value);
      ++report.batches;
    }
  }
  report.after = Diagnose(encoder, head, corpus, diag);
  return report;
}

}  // namespace hmc::hmcl

#endif  // HMC_HMCL_CONTRASTIVE_HPP_
