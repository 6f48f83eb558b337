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
// Evaluation metrics: micro/macro-F1, the KS separation statistic and the
// uniformity / alignment diagnostics for unit-norm embeddings.

#ifndef HMC_METRICS_HPP_
#define HMC_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hmc/corpus.hpp"
#include "hmc/error.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc::metrics {

struct LabelScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // tp + fn
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Report {
  std::vector<LabelScore> per_label;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  // Mean over all labels, zero-support labels counting as F1 = 0.
  double macro_f1 = 0.0;
  // Mean over labels with support > 0 only.
  double macro_f1_supported = 0.0;
};

namespace detail {
inline double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

inline F1Report MicroMacroF1(std::span<const LabelVector> truth, std::span<const LabelVector> pred) {
  if (truth.size() != pred.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(truth.size()) + " truths vs " +
                                               std::to_string(pred.size()) + " predictions");
  }
  const std::size_t m = truth.empty() ? 0 : truth.front().size();
  F1Report r;
  r.per_label.assign(m, {});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != m || pred[i].size() != m) {
      throw Error(ErrorCode::kShapeMismatch, "label vector width differs at record " + std::to_string(i));
    }
    for (std::size_t v = 0; v < m; ++v) {
      auto& s = r.per_label[v];
      if (truth[i][v] && pred[i][v]) ++s.tp;
      if (!truth[i][v] && pred[i][v]) ++s.fp;
      if (truth[i][v] && !pred[i][v]) ++s.fn;
    }
  }
  double macro = 0.0, macro_supported = 0.0;
  std::size_t supported = 0;
  for (auto& s : r.per_label) {
    s.support = s.tp + s.fn;
    s.precision = detail::Ratio(s.tp, s.tp + s.fp);
    s.recall = detail::Ratio(s.tp, s.tp + s.fn);
    s.f1 = detail::Ratio(2 * s.tp, 2 * s.tp + s.fp + s.fn);
    r.tp += s.tp;
    r.fp += s.fp;
    r.fn += s.fn;
    macro += s.f1;
    if (s.support > 0) {
      macro_supported += s.f1;
      ++supported;
    }
  }
  r.micro_precision = detail::Ratio(r.tp, r.tp + r.fp);
  r.micro_recall = detail::Ratio(r.tp, r.tp + r.fn);
  r.micro_f1 = detail::Ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn);
  r.macro_f1 = m == 0 ? 0.0 : macro / static_cast<double>(m);
  r.macro_f1_supported = supported == 0 ? 0.0 : macro_supported / static_cast<double>(supported);
  return r;
}

// Number of (record, parent, child) triples with the child predicted active
// and its parent inactive.
inline std::size_t CountViolations(const LabelHierarchy& h, std::span<const LabelVector> preds) {
  std::size_t n = 0;
  for (const auto& y : preds) n += h.validate_assignment(y).size();
  return n;
}

struct KsReport {
  double ks = 0.0;             // over the binned thresholds
  double exhaustive_ks = 0.0;  // over every unique pooled score
  std::vector<double> thresholds;
  std::vector<double> cdf_pos;
  std::vector<double> cdf_neg;
};

namespace detail {

inline void CheckScores(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kEmptyInput, "KS needs non-empty positive and negative scores");
  }
  for (double s : pos)
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite score");
  for (double s : neg)
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite score");
}

// Fraction of `sorted` strictly below t.
inline double CdfBelow(const std::vector<double>& sorted, double t) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

}  // namespace detail

// max over every unique pooled score t of |CDF_p(t) - CDF_n(t)|, where
// CDF(t) counts scores strictly below t.
inline double ExhaustiveKs(std::span<const double> pos, std::span<const double> neg) {
  detail::CheckScores(pos, neg);
  std::vector<double> p(pos.begin(), pos.end()), n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  std::vector<double> pooled(p);
  pooled.insert(pooled.end(), n.begin(), n.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  double best = 0.0;
  for (double t : pooled) {
    best = std::max(best, std::abs(detail::CdfBelow(p, t) - detail::CdfBelow(n, t)));
  }
  return best;
}

// Pooled scores are sorted (stable) and cut into `bins` equal-count bins;
// the upper bound of every bin except the first is a threshold.
inline KsReport KsStatistic(std::span<const double> pos, std::span<const double> neg,
                            std::size_t bins = 11) {
  detail::CheckScores(pos, neg);
  if (bins < 2) throw Error(ErrorCode::kInvalidArgument, "KS needs at least 2 bins");
  std::vector<double> p(pos.begin(), pos.end()), n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  std::vector<double> pooled(p);
  pooled.insert(pooled.end(), n.begin(), n.end());
  std::stable_sort(pooled.begin(), pooled.end());

  KsReport r;
  const std::size_t total = pooled.size();
  for (std::size_t k = 1; k < bins; ++k) {
    const std::size_t begin = k * total / bins;
    const std::size_t end = (k + 1) * total / bins;
    if (end <= begin) continue;
    const double t = pooled[end - 1];
    const double cp = detail::CdfBelow(p, t);
    const double cn = detail::CdfBelow(n, t);
    r.thresholds.push_back(t);
    r.cdf_pos.push_back(cp);
    r.cdf_neg.push_back(cn);
    r.ks = std::max(r.ks, std::abs(cp - cn));
  }
  r.exhaustive_ks = ExhaustiveKs(pos, neg);
  return r;
}

using Embeddings = std::vector<std::vector<double>>;

namespace detail {

inline void CheckUnit(const Embeddings& e) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    double ss = 0.0;
    for (double x : e[i]) ss += x * x;
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-4) {
      throw Error(ErrorCode::kNonUnitInput, "embedding " + std::to_string(i) + " has norm " +
                                                std::to_string(std::sqrt(ss)));
    }
  }
}

inline double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "embedding widths differ");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace detail

// log E exp{tau (s_x . s_y - 1)} over unordered distinct pairs: every pair
// when n <= max_exact, otherwise `samples` seeded Monte-Carlo pairs.
inline double Uniformity(const Embeddings& emb, double tau, std::uint64_t seed = 0,
                         std::size_t max_exact = 2048, std::size_t samples = 1000000) {
  if (emb.size() < 2) throw Error(ErrorCode::kEmptyInput, "uniformity needs >= 2 embeddings");
  detail::CheckUnit(emb);
  std::vector<double> exps;
  const std::size_t n = emb.size();
  if (n <= max_exact) {
    exps.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) exps.push_back(tau * (detail::Dot(emb[i], emb[j]) - 1.0));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    exps.reserve(samples);
    while (exps.size() < samples) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) exps.push_back(tau * (detail::Dot(emb[i], emb[j]) - 1.0));
    }
  }
  const double mx = *std::max_element(exps.begin(), exps.end());
  double acc = 0.0;
  for (double x : exps) acc += std::exp(x - mx);
  return mx + std::log(acc / static_cast<double>(exps.size()));
}

struct AlignmentReport {
  double total = 0.0;
  std::vector<double> per_level;
  std::vector<std::size_t> pairs_per_level;
  std::vector<int> levels_without_pairs;
};

// Sum over levels of the mean cosine distance 1 - s.s+ across `pairs`
// seeded draws of distinct records sharing an active label at that level.
// Levels where no such pair exists contribute 0 and are listed in
// levels_without_pairs.
inline AlignmentReport Alignment(const Corpus& corpus, const Embeddings& emb,
                                 std::size_t pairs = 1000, std::uint64_t seed = 0) {
  if (emb.size() != corpus.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(emb.size()) + " embeddings for " +
                                               std::to_string(corpus.size()) + " records");
  }
  detail::CheckUnit(emb);
  const auto& h = corpus.hierarchy();
  std::mt19937_64 rng(seed);
  AlignmentReport r;
  for (int level = 1; level <= h.depth(); ++level) {
    // Labels at this level with at least two records.
    std::vector<LabelId> usable;
    for (LabelId v : h.labels_at_level(level)) {
      if (corpus.with_label(v).size() >= 2) usable.push_back(v);
    }
    // Anchors with at least one usable label.
    std::vector<std::pair<std::size_t, std::vector<LabelId>>> anchors;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      std::vector<LabelId> mine;
      for (LabelId v : usable)
        if (corpus[i].labels[v]) mine.push_back(v);
      if (!mine.empty()) anchors.emplace_back(i, std::move(mine));
    }
    double mean = 0.0;
    std::size_t drawn = 0;
    if (anchors.empty()) {
      r.levels_without_pairs.push_back(level);
    } else {
      std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
      double acc = 0.0;
      for (std::size_t k = 0; k < pairs; ++k) {
        const auto& [i, labels] = anchors[pick_anchor(rng)];
        const LabelId v = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
        const auto& pool = corpus.with_label(v);
        // Uniform over pool \ {i}: i is in the sorted pool, so skip past it.
        std::size_t idx = std::uniform_int_distribution<std::size_t>(0, pool.size() - 2)(rng);
        if (pool[idx] >= i) ++idx;
        const std::size_t j = pool[idx];
        acc += 1.0 - detail::Dot(emb[i], emb[j]);
        ++drawn;
      }
      mean = acc / static_cast<double>(drawn);
    }
    r.per_level.push_back(mean);
    r.pairs_per_level.push_back(drawn);
    r.total += mean;
  }
  return r;
}

}  // namespace hmc::metrics

#endif  // HMC_METRICS_HPP_
