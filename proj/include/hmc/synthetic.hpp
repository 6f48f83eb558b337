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
// Seeded generator of label-correlated multi-field records, used as a test
// fixture and for desk-scale end-to-end runs.
//
// Labels are drawn top-down: a top-level label is active with probability
// `top_prior`, a child of an active label with probability `child_prior`.
// Every leaf-most active label (active, with no active child) injects words
// from its own disjoint word pool; everything else is shared noise
// vocabulary plus occasional distractor words from unrelated labels.

#ifndef HMC_SYNTHETIC_HPP_
#define HMC_SYNTHETIC_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hmc/corpus.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

struct SyntheticOptions {
  std::vector<std::string> fields = DefaultFieldNames();
  double top_prior = 0.45;
  double child_prior = 0.5;
  std::size_t words_per_label = 8;
  std::size_t noise_vocabulary = 400;
  std::size_t label_words_name = 1;
  std::size_t label_words_description = 3;
  std::size_t noise_words_description = 8;
  // Chance that the optional trailing field is left empty.
  double empty_last_field = 0.3;
  // Per record, chance of one distractor word from an inactive label's pool.
  double distractor_rate = 0.6;
  // Chance that each injected label word is replaced by a noise word.
  double label_word_dropout = 0.3;
  std::string id_prefix = "r";
};

// Marginal probability that label v is active under `options`.
inline double SyntheticPrior(const LabelHierarchy& h, LabelId v, const SyntheticOptions& options) {
  double p = options.top_prior;
  for (std::size_t i = 0; i < h.ancestors_of(v).size(); ++i) p *= options.child_prior;
  return p;
}

inline std::string SyntheticLabelWord(LabelId v, std::size_t k) {
  return "t" + std::to_string(v) + "x" + std::to_string(k);
}

inline Corpus MakeSyntheticCorpus(std::shared_ptr<const LabelHierarchy> hierarchy, std::size_t n,
                                  std::uint64_t seed, const SyntheticOptions& options = {}) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "synthetic corpus needs n >= 1");
  const LabelHierarchy& h = *hierarchy;
  Corpus corpus(hierarchy, options.fields);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution top(options.top_prior);
  std::bernoulli_distribution child(options.child_prior);
  std::bernoulli_distribution drop_last(options.empty_last_field);
  std::bernoulli_distribution distract(options.distractor_rate);
  std::uniform_int_distribution<std::size_t> pool_word(0, options.words_per_label - 1);
  std::uniform_int_distribution<std::size_t> noise_word(0, options.noise_vocabulary - 1);
  std::uniform_int_distribution<std::size_t> any_label(0, h.size() - 1);

  auto append = [](std::string& text, const std::string& word) {
    if (!text.empty()) text += ' ';
    text += word;
  };
  auto noise = [&] { return "n" + std::to_string(noise_word(rng)); };
  std::bernoulli_distribution dropout(options.label_word_dropout);
  auto label_word = [&](LabelId v) {
    std::string w = SyntheticLabelWord(v, pool_word(rng));
    return dropout(rng) ? noise() : w;
  };

  const std::size_t num_fields = options.fields.size();
  for (std::size_t i = 0; i < n; ++i) {
    LabelVector y(h.size());
    // Level-major order visits parents before children.
    for (LabelId v = 0; v < h.size(); ++v) {
      auto p = h.parent(v);
      if (!p) {
        y.set(v, top(rng));
      } else if (y[*p]) {
        y.set(v, child(rng));
      }
    }
    std::vector<LabelId> leafmost;
    for (LabelId v : y.active()) {
      bool has_active_child = false;
      for (LabelId c : h.children(v)) has_active_child = has_active_child || y[c];
      if (!has_active_child) leafmost.push_back(v);
    }

    Record r;
    r.id = options.id_prefix + std::to_string(i);
    r.fields.assign(num_fields, "");
    r.labels = y;
    std::string& first = r.fields.front();
    std::string& body = r.fields[num_fields > 1 ? 1 : 0];
    for (LabelId v : leafmost) {
      for (std::size_t k = 0; k < options.label_words_name; ++k) {
        append(first, label_word(v));
      }
    }
    if (first.empty() || num_fields > 1) append(first, noise());
    for (std::size_t k = 0; k < options.noise_words_description; ++k) append(body, noise());
    for (LabelId v : leafmost) {
      for (std::size_t k = 0; k < options.label_words_description; ++k) {
        append(body, label_word(v));
      }
    }
    if (distract(rng)) {
      LabelId u = any_label(rng);
      if (!y[u]) append(body, SyntheticLabelWord(u, pool_word(rng)));
    }
    for (std::size_t f = 2; f < num_fields; ++f) {
      if (f + 1 == num_fields && drop_last(rng)) continue;
      for (LabelId v : leafmost) append(r.fields[f], label_word(v));
      append(r.fields[f], noise());
    }
    corpus.add(std::move(r));
  }
  return corpus;
}

}  // namespace hmc

#endif  // HMC_SYNTHETIC_HPP_
