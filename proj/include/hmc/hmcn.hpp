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
// Hierarchical multilabel classification network.
//
// From the root embedding h0 (F x d) the network builds one embedding per
// level: h1 = prior MLP applied row-wise to h0, and h_l for l >= 2 is
// cross-attention with h0 as query and h_{l-1} as key/value. A per-level
// head maps flatten(h_l) to that level's label logits; concatenated they
// form the local prediction in the taxonomy's level-major label order. A
// global head maps flatten(h0) to all m logits. The integration layer maps
// the 2m concatenated logits to the final m logits.
//
// Losses: focal loss on the final likelihoods plus lambda times the hinge
// path regularizer sum_{(u,v) in E} max(0, z_v - z_u).

#ifndef HMC_HMCN_HPP_
#define HMC_HMCN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
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
#include "hmc/metrics.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

struct LossConfig {
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double lambda_reg = 1.0;
  double threshold = 0.5;

  void validate() const {
    if (!(focal_alpha > 0 && focal_alpha < 1)) throw Error(ErrorCode::kInvalidArgument, "focal_alpha must be in (0,1)");
    if (!(focal_gamma >= 0)) throw Error(ErrorCode::kInvalidArgument, "focal_gamma must be >= 0");
    if (!(lambda_reg >= 0)) throw Error(ErrorCode::kInvalidArgument, "lambda_reg must be >= 0");
    if (!(threshold > 0 && threshold < 1)) throw Error(ErrorCode::kInvalidArgument, "threshold must be in (0,1)");
  }
};

inline constexpr double kFocalEpsilon = 1e-7;
inline constexpr double kLogitClamp = 15.0;

struct HmcnConfig {
  EncoderConfig encoder;
  std::size_t hidden = 64;  // hidden width of every prediction head

  void validate() const {
    encoder.validate();
    if (hidden == 0) throw Error(ErrorCode::kInvalidArgument, "hidden must be >= 1");
  }

  // Fingerprint of everything that determines parameter shapes and meaning.
  std::uint64_t fingerprint(const LabelHierarchy& h) const {
    return HashBytes("hmcn;" + encoder.canonical() + ";hidden=" + std::to_string(hidden) +
                     ";labels=" + h.ToText());
  }
};

// Focal loss sum_v -alpha [y (1-p)^g log p + (1-y) p^g log(1-p)] with p
// clamped to [eps, 1-eps]; clamped coordinates pass no gradient.
template <typename T>
ad::Var<T> focal_loss(ad::Var<T> z, const LabelVector& y, const LossConfig& cfg) {
  const auto& zv = z.value();
  if (zv.rows() != 1 || zv.cols() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "focal_loss: " + zv.shape_string() + " vs " +
                                                std::to_string(y.size()) + " labels");
  }
  const double a = cfg.focal_alpha, g = cfg.focal_gamma;
  double total = 0.0;
  for (std::size_t v = 0; v < y.size(); ++v) {
    const double p = std::clamp(static_cast<double>(zv[v]), kFocalEpsilon, 1.0 - kFocalEpsilon);
    total += y[v] ? -a * std::pow(1.0 - p, g) * std::log(p) : -a * std::pow(p, g) * std::log(1.0 - p);
  }
  const auto zi = z.index;
  return z.tape->record("focal_loss", ad::Tensor<T>(1, 1, static_cast<T>(total)), {z},
                        [zi, y, a, g](ad::Tape<T>& t, std::uint32_t self) {
                          const double up = static_cast<double>(t.grad(self)[0]);
                          const auto& zv = t.value(zi);
                          auto& gz = t.grad(zi);
                          for (std::size_t v = 0; v < y.size(); ++v) {
                            const double p = static_cast<double>(zv[v]);
                            if (p < kFocalEpsilon || p > 1.0 - kFocalEpsilon) continue;
                            double d;
                            if (y[v]) {
                              const double q = 1.0 - p;
                              d = -a * (-g * std::pow(q, g - 1.0) * std::log(p) + std::pow(q, g) / p);
                            } else {
                              d = -a * (g * std::pow(p, g - 1.0) * std::log(1.0 - p) -
                                        std::pow(p, g) / (1.0 - p));
                            }
                            gz[v] += static_cast<T>(up * d);
                          }
                        });
}

// sum over parent-child edges of max(0, z_child - z_parent).
template <typename T>
ad::Var<T> path_regularization(ad::Var<T> z, const LabelHierarchy& h) {
  const auto& zv = z.value();
  if (zv.rows() != 1 || zv.cols() != h.size()) {
    throw Error(ErrorCode::kLengthMismatch, "path_regularization: " + zv.shape_string() + " vs " +
                                                std::to_string(h.size()) + " labels");
  }
  auto edges = h.edges();
  T total = T(0);
  for (const auto& e : edges) total += std::max(T(0), zv[e.child] - zv[e.parent]);
  const auto zi = z.index;
  return z.tape->record("path_regularization", ad::Tensor<T>(1, 1, total), {z},
                        [zi, edges = std::move(edges)](ad::Tape<T>& t, std::uint32_t self) {
                          const T up = t.grad(self)[0];
                          const auto& zv = t.value(zi);
                          auto& gz = t.grad(zi);
                          for (const auto& e : edges) {
                            if (zv[e.child] > zv[e.parent]) {
                              gz[e.child] += up;
                              gz[e.parent] -= up;
                            }
                          }
                        });
}

// log(z) - log(1 - z) with z clamped to [eps, 1 - eps].
template <typename T>
ad::Var<T> logit(ad::Var<T> z) {
  ad::Var<T> p = ad::clamp(z, static_cast<T>(kFocalEpsilon), static_cast<T>(1.0 - kFocalEpsilon));
  ad::Tensor<T> ones(p.rows(), p.cols(), T(1));
  ad::Var<T> q = ad::sub(p.tape->constant(std::move(ones)), p);
  return ad::sub(ad::log(p), ad::log(q));
}

// Sigmoid with its input clamped to [-15, 15].
template <typename T>
ad::Var<T> likelihood(ad::Var<T> logits) {
  return ad::sigmoid(ad::clamp(logits, static_cast<T>(-kLogitClamp), static_cast<T>(kLogitClamp)));
}

template <typename T>
struct Prediction {
  std::vector<ad::Var<T>> level_embeddings;  // h_1 .. h_L
  std::vector<ad::Var<T>> level_likelihoods; // z^(1) .. z^(L)
  ad::Var<T> z_local;   // 1 x m
  ad::Var<T> z_global;  // 1 x m
  ad::Var<T> z;         // 1 x m, final
};

template <typename T>
class HmcnModel {
 public:
  HmcnModel(std::shared_ptr<const LabelHierarchy> hierarchy, const HmcnConfig& cfg, ad::Rng& rng)
      : hierarchy_(std::move(hierarchy)), cfg_(cfg), encoder(cfg.encoder, rng) {
    cfg.validate();
    const auto& h = *hierarchy_;
    if (h.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty hierarchy");
    const std::size_t d = cfg.encoder.d;
    const std::size_t flat = cfg.encoder.fields.size() * d;
    const std::size_t m = h.size();
    prior = ad::Mlp<T>("hmcn.prior", {d, d, d}, ad::Activation::kRelu, rng);
    for (int level = 2; level <= h.depth(); ++level) {
      level_attention.emplace_back("hmcn.level_attn." + std::to_string(level), d,
                                   cfg.encoder.heads, rng);
    }
    for (int level = 1; level <= h.depth(); ++level) {
      level_heads.emplace_back("hmcn.level_head." + std::to_string(level),
                               std::vector<std::size_t>{flat, cfg.hidden, h.labels_at_level(level).size()},
                               ad::Activation::kRelu, rng);
    }
    global_head = ad::Mlp<T>("hmcn.global_head", {flat, cfg.hidden, m}, ad::Activation::kRelu, rng);
    integration = ad::Mlp<T>("hmcn.integration", {2 * m, m}, ad::Activation::kIdentity, rng);
    SetAveragingIntegration();
  }

  const LabelHierarchy& hierarchy() const { return *hierarchy_; }
  const std::shared_ptr<const LabelHierarchy>& hierarchy_ptr() const { return hierarchy_; }
  const HmcnConfig& config() const { return cfg_; }
  std::uint64_t fingerprint() const { return cfg_.fingerprint(*hierarchy_); }

  // Integration layer reduced to the mean of the local and global logits.
  void SetAveragingIntegration() {
    auto& layer = integration.layers().front();
    const std::size_t m = hierarchy_->size();
    layer.weight.value.fill(T(0));
    layer.bias.value.fill(T(0));
    for (std::size_t v = 0; v < m; ++v) {
      layer.weight.value(v, v) = T(0.5);
      layer.weight.value(m + v, v) = T(0.5);
    }
  }

  std::vector<ad::Var<T>> local_embeddings(ad::Tape<T>& tape, ad::Var<T> h0) {
    check_root(h0);
    std::vector<ad::Var<T>> out;
    out.push_back(prior.forward(tape, h0));
    for (auto& attn : level_attention) out.push_back(attn.forward(tape, h0, out.back(), out.back()));
    return out;
  }

  // z^(level) = sigmoid(MLP_level(flatten(h_level))).
  ad::Var<T> local_logits(ad::Tape<T>& tape, ad::Var<T> h_level, int level) {
    hierarchy_->labels_at_level(level);
    check_root(h_level);
    return level_heads[static_cast<std::size_t>(level - 1)].forward(tape, ad::flatten(h_level));
  }
  ad::Var<T> local_predict(ad::Tape<T>& tape, ad::Var<T> h_level, int level) {
    return likelihood(local_logits(tape, h_level, level));
  }

  ad::Var<T> global_logits(ad::Tape<T>& tape, ad::Var<T> h0) {
    check_root(h0);
    return global_head.forward(tape, ad::flatten(h0));
  }
  ad::Var<T> global_predict(ad::Tape<T>& tape, ad::Var<T> h0) {
    return likelihood(global_logits(tape, h0));
  }

  // Final likelihoods from the two prediction vectors. The integration layer
  // reads them in logit space.
  ad::Var<T> integrate(ad::Tape<T>& tape, ad::Var<T> z_local, ad::Var<T> z_global) {
    check_vector(z_local, "z_local");
    check_vector(z_global, "z_global");
    return likelihood(integration.forward(tape, ad::concat<T>({logit(z_local), logit(z_global)}, 1)));
  }

  Prediction<T> forward(ad::Tape<T>& tape, ad::Var<T> h0) {
    Prediction<T> p;
    p.level_embeddings = local_embeddings(tape, h0);
    std::vector<ad::Var<T>> local_parts;
    for (int level = 1; level <= hierarchy_->depth(); ++level) {
      ad::Var<T> logits = ad::clamp(local_logits(tape, p.level_embeddings[static_cast<std::size_t>(level - 1)], level),
                                    static_cast<T>(-kLogitClamp), static_cast<T>(kLogitClamp));
      local_parts.push_back(logits);
      p.level_likelihoods.push_back(ad::sigmoid(logits));
    }
    ad::Var<T> local = local_parts.size() == 1 ? local_parts.front() : ad::concat(local_parts, 1);
    ad::Var<T> global = ad::clamp(global_logits(tape, h0), static_cast<T>(-kLogitClamp),
                                  static_cast<T>(kLogitClamp));
    p.z_local = ad::sigmoid(local);
    p.z_global = ad::sigmoid(global);
    p.z = likelihood(integration.forward(tape, ad::concat<T>({local, global}, 1)));
    return p;
  }

  Prediction<T> forward(ad::Tape<T>& tape, const Record& record) {
    return forward(tape, encoder.encode(tape, record));
  }

  void collect(ad::ParameterList<T>& out) {
    encoder.collect(out);
    collect_heads(out);
  }
  void collect_heads(ad::ParameterList<T>& out) {
    prior.collect(out);
    for (auto& a : level_attention) a.collect(out);
    for (auto& hd : level_heads) hd.collect(out);
    global_head.collect(out);
    integration.collect(out);
  }
  ad::ParameterList<T> parameters() {
    ad::ParameterList<T> out;
    collect(out);
    return out;
  }

 private:
  void check_root(ad::Var<T> h) const {
    const std::size_t f = cfg_.encoder.fields.size(), d = cfg_.encoder.d;
    if (h.rows() != f || h.cols() != d) {
      throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(f) + "x" +
                                                 std::to_string(d) + " embedding, got " +
                                                 h.value().shape_string());
    }
  }
  void check_vector(ad::Var<T> z, const char* what) const {
    if (z.rows() != 1 || z.cols() != hierarchy_->size()) {
      throw Error(ErrorCode::kShapeMismatch, std::string(what) + " is " + z.value().shape_string());
    }
  }

  std::shared_ptr<const LabelHierarchy> hierarchy_;
  HmcnConfig cfg_;

 public:
  Encoder<T> encoder;
  ad::Mlp<T> prior;
  std::vector<ad::MultiHeadAttention<T>> level_attention;  // levels 2..L
  std::vector<ad::Mlp<T>> level_heads;                     // levels 1..L
  ad::Mlp<T> global_head;
  ad::Mlp<T> integration;
};

// FL(z, y) + lambda R(z) for one record.
template <typename T>
ad::Var<T> record_loss(ad::Var<T> z, const LabelVector& y, const LabelHierarchy& h,
                       const LossConfig& cfg) {
  ad::Var<T> fl = focal_loss(z, y, cfg);
  if (cfg.lambda_reg == 0.0) return fl;
  return ad::add(fl, ad::scale(path_regularization(z, h), static_cast<T>(cfg.lambda_reg)));
}

// Sum of record losses over `indices`.
template <typename T>
ad::Var<T> total_loss(ad::Tape<T>& tape, HmcnModel<T>& model, const Corpus& corpus,
                      std::span<const std::size_t> indices, const LossConfig& cfg) {
  if (indices.empty()) throw Error(ErrorCode::kEmptyBatch, "total_loss on an empty batch");
  std::vector<ad::Var<T>> terms;
  for (std::size_t i : indices) {
    const Record& r = corpus[i];
    terms.push_back(record_loss(model.forward(tape, r).z, r.labels, model.hierarchy(), cfg));
  }
  return terms.size() == 1 ? terms.front() : ad::sum(ad::concat(terms, 1));
}

// y_v = 1 iff z_v >= threshold; `repair` then drops labels whose parent is
// inactive.
inline LabelVector ThresholdScores(std::span<const double> z, double threshold,
                                   const LabelHierarchy& h, bool repair = false) {
  h.check_length(z.size());
  LabelVector y(z.size());
  for (std::size_t v = 0; v < z.size(); ++v) y.set(v, z[v] >= threshold);
  return repair ? h.prune_orphans(y) : y;
}

template <typename T>
std::vector<double> PredictScores(HmcnModel<T>& model, const Record& record) {
  ad::Tape<T> tape(false);
  const auto& z = model.forward(tape, record).z.value();
  return std::vector<double>(z.values().begin(), z.values().end());
}

template <typename T>
std::vector<std::vector<double>> PredictScores(HmcnModel<T>& model, const Corpus& corpus) {
  std::vector<std::vector<double>> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus.records()) out.push_back(PredictScores(model, r));
  return out;
}

template <typename T>
LabelVector predict_labels(HmcnModel<T>& model, const Record& record, const LossConfig& cfg,
                           bool repair = false) {
  return ThresholdScores(PredictScores(model, record), cfg.threshold, model.hierarchy(), repair);
}

struct EvalSummary {
  metrics::F1Report raw;
  metrics::F1Report repaired;
  std::size_t violations_raw = 0;
  std::size_t violations_repaired = 0;
};

inline EvalSummary EvaluateScores(const std::vector<std::vector<double>>& scores,
                                  const Corpus& corpus, double threshold) {
  const auto& h = corpus.hierarchy();
  std::vector<LabelVector> truth, raw, fixed;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    truth.push_back(corpus[i].labels);
    raw.push_back(ThresholdScores(scores[i], threshold, h, false));
    fixed.push_back(h.prune_orphans(raw.back()));
  }
  EvalSummary s;
  s.raw = metrics::MicroMacroF1(truth, raw);
  s.repaired = metrics::MicroMacroF1(truth, fixed);
  s.violations_raw = metrics::CountViolations(h, raw);
  s.violations_repaired = metrics::CountViolations(h, fixed);
  return s;
}

template <typename T>
EvalSummary Evaluate(HmcnModel<T>& model, const Corpus& corpus, const LossConfig& cfg) {
  return EvaluateScores(PredictScores(model, corpus), corpus, cfg.threshold);
}

struct TrainSchedule {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double lr = 5e-3;
  double decay = 0.8;
  std::size_t decay_every_epochs = 2;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;  // mean per-record loss over the epoch's batches
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t violations = 0;
};

// Mini-batch Adam on the summed batch loss. Batch order for epoch e is a
// pure function of (seed, e), so a resumed run replays the same batches.
template <typename T>
class HmcnTrainer {
 public:
  HmcnTrainer(HmcnModel<T>& model, LossConfig loss, TrainSchedule schedule)
      : model_(model), loss_(loss), schedule_(schedule) {
    loss_.validate();
    if (schedule_.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }

  double lr_for_epoch(std::size_t epoch) const {
    const std::size_t every = std::max<std::size_t>(schedule_.decay_every_epochs, 1);
    return schedule_.lr * std::pow(schedule_.decay, static_cast<double>(epoch / every));
  }

  std::vector<std::size_t> epoch_order(std::size_t epoch, std::size_t n) const {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(schedule_.seed),
                      static_cast<std::uint32_t>(schedule_.seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  // Loss of one batch; one optimizer step at `lr` when lr is set.
  double step(const Corpus& corpus, std::span<const std::size_t> batch, std::optional<double> lr) {
    auto params = model_.parameters();
    ad::Adam<T>::zero_grad(params);
    double value = 0.0;
    try {
      ad::Tape<T> tape(lr.has_value());
      ad::Var<T> loss = total_loss(tape, model_, corpus, batch, loss_);
      value = static_cast<double>(loss.value()[0]);
      if (lr) tape.backward(loss);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteValue) throw;
      throw Error(ErrorCode::kNonFiniteLoss, "epoch " + std::to_string(epochs_done_ + 1) +
                                                 ", batch starting at record " +
                                                 std::to_string(batch.front()) + ": " + e.what());
    }
    if (lr) optimizer_.step(params, *lr);
    return value;
  }

  EpochStats run_epoch(const Corpus& train, const Corpus* eval = nullptr) {
    if (train.empty()) throw Error(ErrorCode::kEmptyBatch, "training corpus is empty");
    const std::size_t epoch = epochs_done_;
    const double lr = lr_for_epoch(epoch);
    const auto order = epoch_order(epoch, train.size());
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += schedule_.batch_size) {
      const std::size_t end = std::min(order.size(), b + schedule_.batch_size);
      total += step(train, std::span<const std::size_t>(order).subspan(b, end - b), lr);
    }
    ++epochs_done_;
    EpochStats s;
    s.epoch = epochs_done_;
    s.lr = lr;
    s.loss = total / static_cast<double>(train.size());
    const EvalSummary e = Evaluate(model_, eval ? *eval : train, loss_);
    s.micro_f1 = e.raw.micro_f1;
    s.macro_f1 = e.raw.macro_f1;
    s.violations = e.violations_raw;
    return s;
  }

  std::vector<EpochStats> train(const Corpus& train_set, const Corpus* eval = nullptr,
                                const std::function<void(const EpochStats&)>& on_epoch = {}) {
    std::vector<EpochStats> history;
    while (epochs_done_ < schedule_.epochs) {
      history.push_back(run_epoch(train_set, eval));
      if (on_epoch) on_epoch(history.back());
    }
    return history;
  }

  std::size_t epochs_done() const { return epochs_done_; }
  void set_epochs_done(std::size_t n) { epochs_done_ = n; }
  ad::Adam<T>& optimizer() { return optimizer_; }
  const LossConfig& loss_config() const { return loss_; }
  const TrainSchedule& schedule() const { return schedule_; }

 private:
  HmcnModel<T>& model_;
  LossConfig loss_;
  TrainSchedule schedule_;
  ad::Adam<T> optimizer_;
  std::size_t epochs_done_ = 0;
};

}  // namespace hmc

#endif  // HMC_HMCN_HPP_
