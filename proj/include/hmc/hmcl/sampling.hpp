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
// Positive and negative instance sampling for hierarchical contrastive
// pretraining.
//
// For anchor record i, level l and each of its active labels v at l, a
// positive is drawn uniformly from X_v (the anchor itself may come back).
// A negative is drawn in two stages: a label u uniformly from the strategy's
// negative label space, then a record uniformly from X_u \ X_v. Drawing the
// label first gives rare labels the same chance as frequent ones.

#ifndef HMC_HMCL_SAMPLING_HPP_
#define HMC_HMCL_SAMPLING_HPP_

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hmc/corpus.hpp"
#include "hmc/error.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc::hmcl {

enum class Strategy { kAll, kLevel, kSibling };

inline const char* StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kAll: return "all";
    case Strategy::kLevel: return "level";
    case Strategy::kSibling: return "sibling";
  }
  return "?";
}

inline Strategy ParseStrategy(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "all") return Strategy::kAll;
  if (text == "level") return Strategy::kLevel;
  if (text == "sibling") return Strategy::kSibling;
  throw Error(ErrorCode::kInvalidArgument, "unknown strategy '" + text + "' (all|level|sibling)");
}

using Rng = std::mt19937_64;

// V_not_v, ascending by label id.
//   All:     every label except v, its ancestors and its descendants
//   Level:   the other labels on v's level
//   Sibling: v's siblings
inline std::vector<LabelId> negative_label_space(const LabelHierarchy& h, LabelId v, Strategy s) {
  std::vector<LabelId> out;
  switch (s) {
    case Strategy::kAll: {
      std::vector<std::uint8_t> excluded(h.size(), 0);
      excluded[v] = 1;
      for (LabelId a : h.ancestors_of(v)) excluded[a] = 1;
      for (LabelId d : h.descendants_of(v)) excluded[d] = 1;
      for (LabelId u = 0; u < h.size(); ++u) {
        if (!excluded[u]) out.push_back(u);
      }
      break;
    }
    case Strategy::kLevel:
      for (LabelId u : h.labels_at_level(h.level(v))) {
        if (u != v) out.push_back(u);
      }
      break;
    case Strategy::kSibling:
      out = h.siblings_of(v);
      std::sort(out.begin(), out.end());
      break;
  }
  return out;
}

template <typename Container>
std::size_t UniformIndex(const Container& c, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng);
}

struct SamplingCounters {
  std::size_t negatives_drawn = 0;
  std::size_t empty_label_space = 0;  // anchor labels with no negative label
  std::size_t empty_pool_redraws = 0; // label draws whose X_u \ X_v was empty
  std::size_t skipped_empty_pool = 0; // anchor labels given up after redraws

  SamplingCounters& operator+=(const SamplingCounters& o) {
    negatives_drawn += o.negatives_drawn;
    empty_label_space += o.empty_label_space;
    empty_pool_redraws += o.empty_pool_redraws;
    skipped_empty_pool += o.skipped_empty_pool;
    return *this;
  }
};

struct NegativeDraw {
  LabelId label = 0;             // accepted label u
  LabelId first_label = 0;       // label drawn on the first attempt
  std::size_t instance = 0;      // record in X_u \ X_v
};

// Negative label spaces and instance pools are cached per anchor label.
class NegativeSampler {
 public:
  NegativeSampler(const Corpus& corpus, Strategy strategy) : corpus_(corpus), strategy_(strategy) {}

  Strategy strategy() const { return strategy_; }
  const Corpus& corpus() const { return corpus_; }

  const std::vector<LabelId>& label_space(LabelId v) {
    auto it = spaces_.find(v);
    if (it == spaces_.end()) {
      it = spaces_.emplace(v, negative_label_space(corpus_.hierarchy(), v, strategy_)).first;
    }
    return it->second;
  }

  // X_u \ X_v, ascending.
  const std::vector<std::size_t>& instance_pool(LabelId u, LabelId v) {
    auto key = std::make_pair(u, v);
    auto it = pools_.find(key);
    if (it == pools_.end()) {
      const auto& xu = corpus_.with_label(u);
      const auto& xv = corpus_.with_label(v);
      std::vector<std::size_t> pool;
      std::set_difference(xu.begin(), xu.end(), xv.begin(), xv.end(), std::back_inserter(pool));
      it = pools_.emplace(key, std::move(pool)).first;
    }
    return it->second;
  }

  // nullopt when V_not_v is empty or no drawn label has a usable pool
  // within |V_not_v| attempts.
  std::optional<NegativeDraw> draw(LabelId v, Rng& rng, SamplingCounters& counters) {
    const auto& space = label_space(v);
    if (space.empty()) {
      ++counters.empty_label_space;
      return std::nullopt;
    }
    NegativeDraw d;
    for (std::size_t attempt = 0; attempt < space.size(); ++attempt) {
      const LabelId u = space[UniformIndex(space, rng)];
      if (attempt == 0) d.first_label = u;
      const auto& pool = instance_pool(u, v);
      if (pool.empty()) {
        ++counters.empty_pool_redraws;
        continue;
      }
      d.label = u;
      d.instance = pool[UniformIndex(pool, rng)];
      ++counters.negatives_drawn;
      return d;
    }
    ++counters.skipped_empty_pool;
    return std::nullopt;
  }

 private:
  const Corpus& corpus_;
  Strategy strategy_;
  std::map<LabelId, std::vector<LabelId>> spaces_;
  std::map<std::pair<LabelId, LabelId>, std::vector<std::size_t>> pools_;
};

// A sampled partner and the anchor label it was drawn for.
struct Partner {
  std::size_t instance = 0;
  LabelId anchor_label = 0;
  LabelId drawn_label = 0;  // v for positives, u for negatives

  bool operator==(const Partner&) const = default;
};

// One draw per active label of record i at `level`, uniform over X_v.
inline std::vector<Partner> sample_positives(const Corpus& c, std::size_t i, int level, Rng& rng) {
  std::vector<Partner> out;
  for (LabelId v : c.active_labels_at_level(i, level).positive) {
    const auto& pool = c.with_label(v);
    out.push_back({pool[UniformIndex(pool, rng)], v, v});
  }
  return out;
}

inline std::vector<Partner> sample_negatives(NegativeSampler& sampler, std::size_t i, int level,
                                             Rng& rng, SamplingCounters& counters) {
  std::vector<Partner> out;
  for (LabelId v : sampler.corpus().active_labels_at_level(i, level).positive) {
    if (auto d = sampler.draw(v, rng, counters)) out.push_back({d->instance, v, d->label});
  }
  return out;
}

struct AnchorLevel {
  std::size_t anchor_label_count = 0;  // |V_il^+|
  std::vector<Partner> positives;
  std::vector<Partner> negatives;

  bool operator==(const AnchorLevel&) const = default;
};

struct AnchorSamples {
  std::size_t anchor = 0;
  std::vector<AnchorLevel> levels;  // index l - 1

  bool operator==(const AnchorSamples&) const = default;
};

struct ContrastiveBatch {
  std::vector<AnchorSamples> anchors;
  int depth = 0;
  SamplingCounters counters;

  bool operator==(const ContrastiveBatch& o) const { return anchors == o.anchors && depth == o.depth; }
};

// Repeats for level l (1-based); levels past the end of the list get none.
inline std::size_t RepeatsForLevel(const std::vector<std::size_t>& repeats, int level) {
  const auto k = static_cast<std::size_t>(level - 1);
  return k < repeats.size() ? repeats[k] : 0;
}

// Throws if a sampled partner breaks the positive/negative membership rules.
inline void CheckBatch(const Corpus& c, const ContrastiveBatch& batch) {
  for (const auto& a : batch.anchors) {
    for (const auto& lv : a.levels) {
      for (const auto& p : lv.positives) {
        if (!c[p.instance].labels[p.anchor_label]) {
          throw Error(ErrorCode::kInvalidArgument, "positive " + std::to_string(p.instance) +
                                                       " lacks its anchor label");
        }
      }
      for (const auto& n : lv.negatives) {
        const auto& y = c[n.instance].labels;
        if (y[n.anchor_label] || !y[n.drawn_label]) {
          throw Error(ErrorCode::kInvalidArgument, "negative " + std::to_string(n.instance) +
                                                       " violates active-u/inactive-v");
        }
      }
    }
  }
}

// Samples every level of every anchor, repeating per `repeats`.
inline ContrastiveBatch build_batch(NegativeSampler& sampler, const std::vector<std::size_t>& anchors,
                                    const std::vector<std::size_t>& repeats, Rng& rng) {
  const Corpus& c = sampler.corpus();
  const int depth = c.hierarchy().depth();
  if (anchors.empty()) throw Error(ErrorCode::kEmptyBatch, "build_batch with no anchors");
  ContrastiveBatch batch;
  batch.depth = depth;
  for (std::size_t i : anchors) {
    if (c[i].labels.popcount() == 0) {
      throw Error(ErrorCode::kInvalidArgument, "anchor " + std::to_string(i) + " has no labels");
    }
    AnchorSamples a;
    a.anchor = i;
    for (int level = 1; level <= depth; ++level) {
      AnchorLevel lv;
      lv.anchor_label_count = c.active_labels_at_level(i, level).positive.size();
      if (lv.anchor_label_count > 0) {
        for (std::size_t r = 0; r < RepeatsForLevel(repeats, level); ++r) {
          auto pos = sample_positives(c, i, level, rng);
          auto neg = sample_negatives(sampler, i, level, rng, batch.counters);
          lv.positives.insert(lv.positives.end(), pos.begin(), pos.end());
          lv.negatives.insert(lv.negatives.end(), neg.begin(), neg.end());
        }
      }
      a.levels.push_back(std::move(lv));
    }
    batch.anchors.push_back(std::move(a));
  }
  CheckBatch(c, batch);
  return batch;
}

// Label-stage and instance-stage tallies for one anchor label.
struct AuditRow {
  LabelId anchor_label = 0;
  LabelId negative_label = 0;
  std::size_t label_stage_count = 0;
  std::size_t instance_stage_count = 0;
};

struct AuditResult {
  std::vector<AuditRow> rows;  // every u in V_not_v, ascending
  std::size_t draws = 0;
  SamplingCounters counters;
};

// `draws` label-stage draws for anchor label v. The label stage counts the
// first label drawn; the instance stage counts the label whose pool
// supplied the negative.
inline AuditResult AuditNegatives(NegativeSampler& sampler, LabelId v, std::size_t draws, Rng& rng) {
  AuditResult out;
  out.draws = draws;
  const auto& space = sampler.label_space(v);
  std::map<LabelId, std::size_t> index;
  for (LabelId u : space) {
    index[u] = out.rows.size();
    out.rows.push_back({v, u, 0, 0});
  }
  for (std::size_t k = 0; k < draws; ++k) {
    auto d = sampler.draw(v, rng, out.counters);
    if (!d) continue;
    ++out.rows[index.at(d->first_label)].label_stage_count;
    ++out.rows[index.at(d->label)].instance_stage_count;
  }
  return out;
}

}  // namespace hmc::hmcl

#endif  // HMC_HMCL_SAMPLING_HPP_
