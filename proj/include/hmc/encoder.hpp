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
// Multi-field record encoder.
//
// Each field is tokenized into hashed word ids behind a per-field special
// token, embedded, and passed through one self-attention layer; the output
// row at the special-token position is the field vector. The F field
// vectors are stacked and fused with a second self-attention layer into the
// F x d root embedding h0. Empty fields contribute a zero vector and are
// masked out of the fusion keys.

#ifndef HMC_ENCODER_HPP_
#define HMC_ENCODER_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmc/ad/nn.hpp"
#include "hmc/ad/ops.hpp"
#include "hmc/ad/tape.hpp"
#include "hmc/corpus.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"

namespace hmc {

struct EncoderConfig {
  std::size_t vocab_buckets = 4096;
  std::size_t d = 16;
  std::size_t heads = 2;
  std::size_t max_tokens = 32;
  std::vector<std::string> fields = DefaultFieldNames();

  void validate() const {
    if (vocab_buckets == 0) throw Error(ErrorCode::kInvalidArgument, "vocab_buckets must be >= 1");
    if (d == 0 || heads == 0 || d % heads != 0) {
      throw Error(ErrorCode::kInvalidArgument, "d must be a positive multiple of heads");
    }
    if (max_tokens == 0) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
    if (fields.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one field required");
  }

  std::string canonical() const {
    std::string s = "vocab_buckets=" + std::to_string(vocab_buckets) + ";d=" + std::to_string(d) +
                    ";heads=" + std::to_string(heads) + ";max_tokens=" + std::to_string(max_tokens) +
                    ";fields=";
    for (std::size_t i = 0; i < fields.size(); ++i) s += (i ? "," : "") + fields[i];
    return s;
  }
};

// Lowercased words: maximal runs of ASCII alphanumerics or non-ASCII bytes.
inline std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

class Tokenizer {
 public:
  explicit Tokenizer(const EncoderConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  // Ids [0, vocab_buckets) are hashed words; vocab_buckets + f is the
  // special token of field f.
  std::size_t vocabulary_size() const { return cfg_.vocab_buckets + cfg_.fields.size(); }

  std::int32_t special_id(std::size_t field) const {
    if (field >= cfg_.fields.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "field " + std::to_string(field));
    }
    return static_cast<std::int32_t>(cfg_.vocab_buckets + field);
  }

  std::int32_t bucket(std::string_view word) const {
    return static_cast<std::int32_t>(HashBytes(word) % cfg_.vocab_buckets);
  }

  // [special, w_1 .. w_k] with k <= max_tokens, or empty for text with no
  // words.
  std::vector<std::int32_t> tokenize(std::string_view text, std::size_t field) const {
    std::vector<std::int32_t> ids;
    const auto words = SplitWords(text);
    if (words.empty()) return ids;
    ids.push_back(special_id(field));
    for (std::size_t i = 0; i < words.size() && i < cfg_.max_tokens; ++i) {
      ids.push_back(bucket(words[i]));
    }
    return ids;
  }

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
};

template <typename T>
struct FieldEmbedding {
  ad::Var<T> vector;  // 1 x d
  bool present = false;
};

template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, ad::Rng& rng)
      : cfg_(cfg),
        tokenizer_(cfg),
        embedding("encoder.embedding", tokenizer_.vocabulary_size(), cfg.d),
        field_attention("encoder.field_attn", cfg.d, cfg.heads, rng),
        fusion("encoder.fusion", cfg.d, cfg.heads, rng) {
    ad::InitNormal(embedding, 1.0 / std::sqrt(static_cast<double>(cfg.d)), rng);
  }

  const EncoderConfig& config() const { return cfg_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  std::size_t num_fields() const { return cfg_.fields.size(); }

  FieldEmbedding<T> encode_field(ad::Tape<T>& tape, std::span<const std::int32_t> tokens) {
    if (tokens.empty()) return {tape.constant(ad::Tensor<T>(1, cfg_.d)), false};
    ad::Var<T> x = ad::gather_rows(tape, embedding, tokens);
    ad::Var<T> head = ad::slice_rows(x, 0, 1);
    return {field_attention.forward(tape, head, x, x), true};
  }

  // Stacks the field vectors into F x d and applies masked self-attention.
  ad::Var<T> fuse(ad::Tape<T>& tape, const std::vector<FieldEmbedding<T>>& fields) {
    if (fields.size() != num_fields()) {
      throw Error(ErrorCode::kShapeMismatch, "fuse: " + std::to_string(fields.size()) +
                                                 " fields, encoder has " +
                                                 std::to_string(num_fields()));
    }
    std::vector<ad::Var<T>> rows;
    std::vector<std::uint8_t> mask;
    for (const auto& f : fields) {
      if (f.vector.cols() != cfg_.d) {
        throw Error(ErrorCode::kShapeMismatch, "fuse: field width " + std::to_string(f.vector.cols()));
      }
      rows.push_back(f.vector);
      mask.push_back(f.present ? 1 : 0);
    }
    if (std::find(mask.begin(), mask.end(), 1) == mask.end()) {
      throw Error(ErrorCode::kAllFieldsEmpty, "record has no non-empty field");
    }
    ad::Var<T> stacked = rows.size() == 1 ? rows.front() : ad::concat(rows, 0);
    return fusion.forward(tape, stacked, stacked, stacked, mask);
  }

  ad::Var<T> encode_texts(ad::Tape<T>& tape, const std::vector<std::string>& texts) {
    if (texts.size() != num_fields()) {
      throw Error(ErrorCode::kShapeMismatch, std::to_string(texts.size()) + " texts for " +
                                                 std::to_string(num_fields()) + " fields");
    }
    std::vector<FieldEmbedding<T>> fields;
    for (std::size_t f = 0; f < texts.size(); ++f) {
      fields.push_back(encode_field(tape, tokenizer_.tokenize(texts[f], f)));
    }
    return fuse(tape, fields);
  }

  // h0 for a record (F x d).
  ad::Var<T> encode(ad::Tape<T>& tape, const Record& record) {
    return encode_texts(tape, record.fields);
  }

  void collect(ad::ParameterList<T>& out) {
    out.push_back(&embedding);
    field_attention.collect(out);
    fusion.collect(out);
  }

 private:
  EncoderConfig cfg_;
  Tokenizer tokenizer_;

 public:
  ad::Parameter<T> embedding;
  ad::MultiHeadAttention<T> field_attention;
  ad::MultiHeadAttention<T> fusion;
};

}  // namespace hmc

#endif  // HMC_ENCODER_HPP_
