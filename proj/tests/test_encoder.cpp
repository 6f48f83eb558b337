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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <unordered_map>

#include "hmc/ad/grad_check.hpp"
#include "hmc/encoder.hpp"
#include "hmc/hash.hpp"
#include "test_util.hpp"

namespace {

using hmc::EncoderConfig;
using hmc::Tokenizer;
using namespace hmc::ad;

EncoderConfig SmallConfig() {
  EncoderConfig cfg;
  cfg.vocab_buckets = 64;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.max_tokens = 6;
  return cfg;
}

template <typename T>
void ExpectRowsNear(const Tensor<T>& a, const Tensor<T>& b, double tol) {
  ASSERT_TRUE(a.same_shape(b)) << a.shape_string() << " vs " << b.shape_string();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << i;
}

TEST(Hash, KnownVectors) {
  // FNV-1a 64 reference values.
  EXPECT_EQ(hmc::HashBytes(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hmc::HashBytes("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hmc::HashBytes("foobar"), 0x85944171f73967e8ULL);
  EXPECT_NE(hmc::DeriveSeed(1, "init"), hmc::DeriveSeed(1, "hmcl.sampler"));
  EXPECT_NE(hmc::DeriveSeed(1, "init"), hmc::DeriveSeed(2, "init"));
  EXPECT_EQ(hmc::HexDigest(0xabcULL), "0000000000000abc");
}

TEST(Tokenizer, Deterministic) {
  Tokenizer tok(SmallConfig());
  EXPECT_EQ(tok.tokenize("Credit cards, loans & more!", 1), tok.tokenize("Credit cards, loans & more!", 1));
  EXPECT_EQ(tok.tokenize("CREDIT", 0), tok.tokenize("credit", 0));
  EXPECT_EQ(hmc::SplitWords("Hello, wOrld--42"), (std::vector<std::string>{"hello", "world", "42"}));
}

TEST(Tokenizer, EmptyText) {
  Tokenizer tok(SmallConfig());
  EXPECT_TRUE(tok.tokenize("", 0).empty());
  EXPECT_TRUE(tok.tokenize("  ,;!  ", 2).empty());
}

TEST(Tokenizer, SpecialTokenReservedPerField) {
  auto cfg = SmallConfig();
  Tokenizer tok(cfg);
  std::set<std::int32_t> specials;
  for (std::size_t f = 0; f < cfg.fields.size(); ++f) {
    auto ids = tok.tokenize("some words here", f);
    ASSERT_FALSE(ids.empty());
    EXPECT_EQ(ids[0], tok.special_id(f));
    specials.insert(ids[0]);
    for (std::size_t k = 1; k < ids.size(); ++k) {
      EXPECT_GE(ids[k], 0);
      EXPECT_LT(ids[k], static_cast<std::int32_t>(cfg.vocab_buckets));
    }
  }
  EXPECT_EQ(specials.size(), cfg.fields.size());
  EXPECT_EQ(tok.vocabulary_size(), cfg.vocab_buckets + cfg.fields.size());
  EXPECT_HMC_ERROR(tok.special_id(3), kIndexOutOfRange);
}

TEST(Tokenizer, Truncates) {
  Tokenizer tok(SmallConfig());
  auto ids = tok.tokenize("a b c d e f g h i j", 0);
  EXPECT_EQ(ids.size(), 1u + 6u);
}

// Words landing in an occupied bucket, against the birthday expectation
// n - B (1 - (1 - 1/B)^n).
TEST(Tokenizer, CollisionRate) {
  EncoderConfig cfg;
  cfg.vocab_buckets = 1u << 20;
  Tokenizer tok(cfg);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> letter('a', 'z');
  std::set<std::string> words;
  while (words.size() < 10000) {
    std::string w(6 + rng() % 6, 'a');
    for (auto& c : w) c = static_cast<char>(letter(rng));
    words.insert(w);
  }
  std::set<std::int32_t> used;
  std::size_t collisions = 0;
  for (const auto& w : words) collisions += !used.insert(tok.bucket(w)).second;
  const double n = 10000, b = static_cast<double>(cfg.vocab_buckets);
  const double expected = n - b * (1 - std::pow(1 - 1 / b, n));
  EXPECT_LT(static_cast<double>(collisions), 2 * expected) << collisions << " vs " << expected;
}

TEST(EncoderConfig, Validation) {
  auto cfg = SmallConfig();
  cfg.heads = 3;
  EXPECT_HMC_ERROR(cfg.validate(), kInvalidArgument);
  cfg = SmallConfig();
  cfg.max_tokens = 0;
  EXPECT_HMC_ERROR(cfg.validate(), kInvalidArgument);
  cfg = SmallConfig();
  cfg.fields.clear();
  EXPECT_HMC_ERROR(cfg.validate(), kInvalidArgument);
}

TEST(Encoder, EmptyFieldIsZeroAndAbsent) {
  Rng rng(1);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto f = enc.encode_field(tape, {});
  EXPECT_FALSE(f.present);
  EXPECT_EQ(f.vector.value(), Tensor<double>(1, 8));
}

TEST(Encoder, RootShape) {
  Rng rng(1);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto h0 = enc.encode_texts(tape, {"wallet app", "save and invest money", "great"});
  EXPECT_EQ(h0.rows(), 3u);
  EXPECT_EQ(h0.cols(), 8u);
  EXPECT_HMC_ERROR(enc.encode_texts(tape, {"", "", ""}), kAllFieldsEmpty);
  EXPECT_HMC_ERROR(enc.encode_texts(tape, {"a", "b"}), kShapeMismatch);
}

TEST(Encoder, SingleTokenFieldDeterministic) {
  Rng rng(4);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  const std::vector<std::int32_t> ids = {enc.tokenizer().special_id(0), 7};
  auto a = enc.encode_field(tape, ids).vector.value();
  auto b = enc.encode_field(tape, ids).vector.value();
  EXPECT_EQ(a, b);
  const std::vector<std::int32_t> other = {enc.tokenizer().special_id(0), 8};
  EXPECT_NE(a, enc.encode_field(tape, other).vector.value());
}

// Zero query projection makes every score equal, so attention is a plain
// mean and the order of the non-special tokens cannot matter.
TEST(Encoder, UniformAttentionPermutationInvariant) {
  Rng rng(2);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  enc.field_attention.query.weight.value.fill(0);
  enc.field_attention.query.bias.value.fill(0);
  const std::int32_t s = enc.tokenizer().special_id(1);
  Tape<double> tape;
  auto a = enc.encode_field(tape, std::vector<std::int32_t>{s, 3, 9, 27, 40}).vector.value();
  auto b = enc.encode_field(tape, std::vector<std::int32_t>{s, 40, 27, 3, 9}).vector.value();
  ExpectRowsNear(a, b, 1e-12);
}

TEST(Encoder, TruncationIsExact) {
  Rng rng(3);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto a = enc.encode_texts(tape, {"one two three four five six", "", ""}).value();
  auto b = enc.encode_texts(tape, {"one two three four five six seven eight nine", "", ""}).value();
  EXPECT_EQ(a, b);
}

TEST(Encoder, MaskingEqualsRemoval) {
  Rng rng(5);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto& tok = enc.tokenizer();
  auto f0 = enc.encode_field(tape, tok.tokenize("wallet app", 0));
  auto f2 = enc.encode_field(tape, tok.tokenize("editor pick", 2));
  // Field 1 carries a nonzero vector but is flagged absent.
  auto f1 = enc.encode_field(tape, tok.tokenize("loud distracting text", 1));
  f1.present = false;
  auto masked = enc.fuse(tape, {f0, f1, f2}).value();

  auto queries = concat<double>({f0.vector, f1.vector, f2.vector}, 0);
  auto kept = concat<double>({f0.vector, f2.vector}, 0);
  auto removed = enc.fusion.forward(tape, queries, kept, kept).value();
  ExpectRowsNear(masked, removed, 1e-6);
}

TEST(Encoder, SinglePresentFieldDrivesEveryRow) {
  Rng rng(6);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto h0 = enc.encode_texts(tape, {"", "only this field", ""});
  auto f1 = enc.encode_field(tape, enc.tokenizer().tokenize("only this field", 1));
  auto expect = enc.fusion.output.forward(tape, enc.fusion.value.forward(tape, f1.vector)).value();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(h0.value()(r, c), expect(0, c), 1e-12);
}

TEST(Encoder, EqualFieldsGiveEqualRows) {
  Rng rng(7);
  hmc::Encoder<double> enc(SmallConfig(), rng);
  Tape<double> tape;
  auto f = enc.encode_field(tape, enc.tokenizer().tokenize("same words", 0));
  auto h0 = enc.fuse(tape, {f, f, f}).value();
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(h0(r, c), h0(0, c), 1e-12);
}

TEST(Encoder, ParameterGradients) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    hmc::Encoder<double> enc(SmallConfig(), rng);
    ParameterList<double> params;
    enc.collect(params);
    const std::vector<std::string> texts = {"alpha beta", "gamma delta alpha", seed % 2 ? "" : "omega"};
    auto rep = GradCheckParameters<double>(
        [&](Tape<double>& t) {
          auto h0 = enc.encode_texts(t, texts);
          std::vector<double> w(24);
          for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.7 * static_cast<double>(i) + 0.3);
          return sum(mul(h0, t.constant(Tensor<double>(3, 8, std::move(w)))));
        },
        params);
    ASSERT_TRUE(rep.passed()) << "seed " << seed << ": " << rep.worst;
  }
}

}  // namespace
