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
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `hmc_acceptance 3 5` runs a subset.

#include <sys/wait.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hmc/ad/grad_check.hpp"
#include "hmc/hash.hpp"
#include "hmc/hmcl/contrastive.hpp"
#include "hmc/hmcl/sampling.hpp"
#include "hmc/hmcn.hpp"
#include "hmc/metrics.hpp"
#include "hmc/synthetic.hpp"
#include "oracles.hpp"

#ifndef HMC_CLI_PATH
#define HMC_CLI_PATH "hmc"
#endif

namespace {

namespace fs = std::filesystem;
using namespace hmc;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using D = double;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failure notes; the first few are kept for the summary line.
struct Checker {
  std::size_t checks = 0;
  std::size_t failed = 0;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    ++failed;
    if (notes.size() < 4) notes.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    std::string d = summary + "; " + std::to_string(checks - failed) + "/" + std::to_string(checks) + " checks";
    for (const auto& n : notes) d += "; " + n;
    return {failed == 0, d};
  }
};

std::string Fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

Tensor<D> Random(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<D> t(r, c);
  for (auto& x : t.values()) x = u(rng);
  return t;
}

// sum(W * y) with a fixed W, so every output coordinate reaches the scalar.
Var<D> Readout(Tape<D>& tape, Var<D> y) {
  return ad::sum(ad::mul(y, tape.constant(Random(y.rows(), y.cols(), 1000 + y.rows() * 31 + y.cols()))));
}

std::shared_ptr<const LabelHierarchy> App() {
  return std::make_shared<const LabelHierarchy>(AppStoreExampleHierarchy());
}

LabelVector Active(const LabelHierarchy& h, std::initializer_list<const char*> names) {
  LabelVector y(h.size());
  for (const char* n : names) y.set(h.id(n));
  return y;
}

// ---------------------------------------------------------------- 1

Outcome GradientOracle() {
  Checker c;
  ad::GradCheckOptions sampled;
  sampled.max_coords_per_array = 24;
  auto note = [](const char* what, std::uint64_t seed, const ad::GradCheckReport& r) {
    return std::string(what) + " seed " + std::to_string(seed) + " worst " + r.worst;
  };
  const auto h = App();
  HmcnConfig small;
  small.encoder.vocab_buckets = 64;
  small.encoder.d = 8;
  small.encoder.heads = 2;
  small.encoder.max_tokens = 6;
  small.hidden = 12;

  Corpus pairs_corpus(h, DefaultFieldNames());
  {
    auto add = [&](const char* name, std::initializer_list<const char*> labels, int copies) {
      for (int k = 0; k < copies; ++k) pairs_corpus.add({name + std::to_string(k), {name, "some text", ""}, Active(*h, labels)});
    };
    add("fin", {"Finance", "Investment"}, 2);
    add("loan", {"Finance", "Loan", "Credit Loan"}, 1);
    add("mort", {"Finance", "Loan", "Mortgage Loan"}, 1);
    add("video", {"Video"}, 1);
    add("moba", {"Game", "Moba"}, 3);
    add("rpg", {"Game", "RPG"}, 2);
  }

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    // Losses on their own inputs.
    LabelVector y(10);
    for (std::size_t v = 0; v < 10; ++v) y.set(v, (seed + v) % 3 == 0);
    const auto logits = Random(1, 10, seed, -3, 3);
    auto focal = ad::GradCheck<D>([&](Tape<D>&, Var<D> z) { return focal_loss(ad::sigmoid(z), y, LossConfig{}); }, logits);
    c.expect(focal.passed(), note("focal", seed, focal));
    auto reg = ad::GradCheck<D>([&](Tape<D>&, Var<D> z) { return path_regularization(ad::sigmoid(z), *h); }, logits);
    c.expect(reg.passed(), note("path regularization", seed, reg));

    // MLP and attention blocks, parameters and inputs.
    ad::Rng rng(seed);
    ad::Mlp<D> mlp("m", {4, 6, 3}, ad::Activation::kTanh, rng);
    ad::ParameterList<D> mp;
    mlp.collect(mp);
    for (auto* p : mp) ad::InitNormal(*p, 0.5, rng);
    const auto x = Random(2, 4, seed + 100);
    auto mlp_p = ad::GradCheckParameters<D>([&](Tape<D>& t) { return Readout(t, mlp.forward(t, t.constant(x))); }, mp);
    c.expect(mlp_p.passed(), note("mlp params", seed, mlp_p));
    auto mlp_x = ad::GradCheck<D>([&](Tape<D>& t, Var<D> in) { return Readout(t, mlp.forward(t, in)); }, x);
    c.expect(mlp_x.passed(), note("mlp input", seed, mlp_x));

    ad::MultiHeadAttention<D> attn("a", 8, 2, rng);
    ad::ParameterList<D> ap;
    attn.collect(ap);
    for (auto* p : ap) ad::InitNormal(*p, 0.4, rng);
    const auto q = Random(2, 8, seed + 1), kv = Random(3, 8, seed + 2);
    const std::vector<std::uint8_t> mask = {1, 1, 0};
    auto attn_p = ad::GradCheckParameters<D>(
        [&](Tape<D>& t) {
          auto k = t.constant(kv);
          return Readout(t, attn.forward(t, t.constant(q), k, k, mask));
        },
        ap);
    c.expect(attn_p.passed(), note("attention params", seed, attn_p));
    auto attn_x = ad::GradCheck<D>([&](Tape<D>& t, Var<D> in) { return Readout(t, attn.forward(t, in, in, in)); },
                                   Random(2, 8, seed + 3));
    c.expect(attn_x.passed(), note("attention input", seed, attn_x));

    // Encoder parameters.
    Encoder<D> enc(small.encoder, rng);
    ad::ParameterList<D> ep;
    enc.collect(ep);
    const std::vector<std::string> texts = {"alpha beta", "gamma delta alpha", seed % 2 ? "" : "omega"};
    auto enc_p = ad::GradCheckParameters<D>([&](Tape<D>& t) { return Readout(t, enc.encode_texts(t, texts)); }, ep);
    c.expect(enc_p.passed(), note("encoder", seed, enc_p));

    // Heads: every output score against h0, then the total loss over all
    // model parameters.
    HmcnModel<D> model(h, small, rng);
    for (auto& w : model.integration.layers().front().weight.value.values()) w += 0.1 * std::sin(7.0 * w + seed);
    auto heads = ad::GradCheck<D>([&](Tape<D>& t, Var<D> h0) { return Readout(t, model.forward(t, h0).z); },
                                  Random(3, 8, seed + 50));
    c.expect(heads.passed(), note("heads", seed, heads));
    auto corpus = MakeSyntheticCorpus(h, 2, seed);
    ad::ParameterList<D> all;
    model.collect(all);
    const std::vector<std::size_t> batch = {0, 1};
    auto total = ad::GradCheckParameters<D>(
        [&](Tape<D>& t) { return total_loss(t, model, corpus, batch, LossConfig{}); }, all, sampled);
    c.expect(total.passed(), note("total loss", seed, total));

    // Contrastive loss through encoder and projection head. Normalization
    // is not differentiable at a zero row, so that case is reported.
    Encoder<D> cenc(small.encoder, rng);
    hmcl::ProjectionHead<D> head(24, 16, 4, rng);
    double min_norm = 1e300;
    for (const auto& r : pairs_corpus.records()) {
      Tape<D> t(false);
      double n = 0;
      for (double v : head.mlp.forward(t, ad::flatten(cenc.encode(t, r))).value().values()) n += v * v;
      min_norm = std::min(min_norm, std::sqrt(n));
    }
    c.expect(min_norm > 1e-3, "contrastive seed " + std::to_string(seed) + " has a zero projection row");
    hmcl::NegativeSampler sampler(pairs_corpus, static_cast<hmcl::Strategy>(seed % 3));
    hmcl::Rng srng(seed);
    auto cbatch = hmcl::build_batch(sampler, {0, 2, 5, 8}, {1, 2, 2}, srng);
    ad::ParameterList<D> cp;
    cenc.collect(cp);
    head.collect(cp);
    auto cl = ad::GradCheckParameters<D>(
        [&](Tape<D>& t) { return hmcl::contrastive_loss(t, cenc, head, pairs_corpus, cbatch, 0.5); }, cp, sampled);
    c.expect(cl.passed(), note("contrastive", seed, cl));
  }
  return c.outcome("20 seeds x {focal, path reg, mlp, attention, encoder, heads, total, contrastive}");
}

// ---------------------------------------------------------------- 2

Outcome SamplingTable() {
  // Cells as printed, with "Parent-Child" paths shortened to label names.
  using hmcl::Strategy;
  struct Cell {
    const char* anchor;
    Strategy strategy;
    std::set<std::string> expect;
  };
  const std::vector<Cell> table = {
      {"Finance", Strategy::kAll, {"Video", "Game", "Moba", "RPG", "Strategy"}},
      {"Finance", Strategy::kLevel, {"Video", "Game"}},
      {"Finance", Strategy::kSibling, {"Video", "Game"}},
      {"Investment", Strategy::kAll,
       {"Finance", "Loan", "Credit Loan", "Mortgage Loan", "Video", "Game", "Moba", "RPG", "Strategy"}},
      {"Investment", Strategy::kLevel, {"Loan", "Moba", "RPG", "Strategy"}},
      {"Investment", Strategy::kSibling, {"Loan"}},
  };
  const auto h = AppStoreExampleHierarchy();
  Checker c;
  for (const auto& cell : table) {
    std::set<std::string> got;
    for (auto v : hmcl::negative_label_space(h, h.id(cell.anchor), cell.strategy)) got.insert(h.name(v));
    std::string diff;
    for (const auto& n : cell.expect)
      if (!got.count(n)) diff += " missing " + n;
    for (const auto& n : got)
      if (!cell.expect.count(n)) diff += " extra " + n;
    c.expect(diff.empty(), std::string(cell.anchor) + "/" + hmcl::StrategyName(cell.strategy) + ":" + diff);
  }
  return c.outcome("6 table cells");
}

// ---------------------------------------------------------------- 3

double ChiSquareUpperTail(double stat, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

bool IsAbove(const std::map<std::string, std::string>& parent, const std::string& a, std::string b) {
  while (parent.at(b) != "ROOT") {
    b = parent.at(b);
    if (b == a) return true;
  }
  return false;
}

Outcome SamplingDistribution() {
  Checker c;
  const auto h = App();
  const Corpus corpus = MakeSyntheticCorpus(h, 2000, 77);
  const std::size_t draws = 100000;
  std::string summary;
  // One Pearson statistic per strategy, summed over every anchor label whose
  // negative space has two or more labels (independent draws, so the
  // statistics and their degrees of freedom add).
  for (auto strategy : {hmcl::Strategy::kAll, hmcl::Strategy::kLevel, hmcl::Strategy::kSibling}) {
    hmcl::NegativeSampler sampler(corpus, strategy);
    hmcl::Rng rng(DeriveSeed(2026, hmcl::StrategyName(strategy)));
    double stat = 0, dof = 0, worst_anchor_p = 1.0;
    for (LabelId v = 0; v < h->size(); ++v) {
      const auto& space = sampler.label_space(v);
      if (space.empty()) continue;
      auto audit = hmcl::AuditNegatives(sampler, v, draws, rng);
      std::size_t seen = 0;
      for (const auto& row : audit.rows) seen += row.label_stage_count;
      c.expect(seen == draws, "label stage skipped draws for " + h->name(v));
      if (space.size() < 2) continue;
      const double expect = static_cast<double>(seen) / static_cast<double>(space.size());
      double s = 0;
      for (const auto& row : audit.rows) {
        const double d = static_cast<double>(row.label_stage_count) - expect;
        s += d * d / expect;
      }
      stat += s;
      dof += static_cast<double>(space.size() - 1);
      worst_anchor_p = std::min(worst_anchor_p, ChiSquareUpperTail(s, static_cast<double>(space.size() - 1)));
    }
    const double p = ChiSquareUpperTail(stat, dof);
    c.expect(p > 0.01, std::string(hmcl::StrategyName(strategy)) + " chi-square p " + Fmt(p));
    summary += std::string(hmcl::StrategyName(strategy)) + " p=" + Fmt(p) + " (min anchor " + Fmt(worst_anchor_p) + ") ";
  }

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto edges = oracle::RandomTree(rng, 1 + rng() % 40, 1 + static_cast<int>(rng() % 5));
    const auto tree = LabelHierarchy::FromEdges(edges);
    const auto parent = oracle::ParentMap(edges);
    bool ok = true;
    for (LabelId v = 0; v < tree.size(); ++v) {
      auto names = [&](hmcl::Strategy s) {
        std::set<std::string> out;
        for (auto u : hmcl::negative_label_space(tree, v, s)) out.insert(tree.name(u));
        return out;
      };
      const auto all = names(hmcl::Strategy::kAll), level = names(hmcl::Strategy::kLevel),
                 sib = names(hmcl::Strategy::kSibling);
      ok = ok && std::includes(level.begin(), level.end(), sib.begin(), sib.end()) &&
           std::includes(all.begin(), all.end(), level.begin(), level.end());
      std::set<std::string> expect;
      const std::string& me = tree.name(v);
      for (const auto& [child, p] : parent)
        if (child != me && !IsAbove(parent, child, me) && !IsAbove(parent, me, child)) expect.insert(child);
      ok = ok && all == expect;
    }
    c.expect(ok, "containment fails on random tree " + std::to_string(trial));
  }
  return c.outcome(summary + "| containment on 100 random trees");
}

// ---------------------------------------------------------------- 4

double PathReg(const std::vector<double>& z, const LabelHierarchy& h) {
  Tape<D> t(false);
  Tensor<D> row(1, z.size());
  std::copy(z.begin(), z.end(), row.values().begin());
  return path_regularization(t.constant(row), h).value()[0];
}

Outcome PathRegularizationExactness() {
  Checker c;
  const auto h = AppStoreExampleHierarchy();
  std::vector<int> parent(h.size(), -1);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [p, ch] : oracle::AppEdges()) {
    if (p == "ROOT") continue;
    parent[h.id(ch)] = static_cast<int>(h.id(p));
    edges.emplace_back(h.id(p), h.id(ch));
  }
  std::size_t zero = 0;
  for (unsigned bits = 0; bits < (1u << 10); ++bits) {
    std::vector<double> z(10);
    for (std::size_t v = 0; v < 10; ++v) z[v] = (bits >> v) & 1u;
    const double r = PathReg(z, h);
    c.expect((r == 0.0) == oracle::MonotoneAlongPaths(z, parent), "pattern " + std::to_string(bits));
    c.expect(std::abs(r - oracle::PathHinge(z, edges)) <= 1e-12, "hinge value, pattern " + std::to_string(bits));
    zero += r == 0.0;
  }
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t monotone = 0;
  for (int k = 0; k < 10000; ++k) {
    std::vector<double> z(10);
    // Half free, half shrunk from the parent so both sides of the iff occur.
    for (std::size_t v = 0; v < 10; ++v) {
      const int p = parent[v];
      z[v] = (k % 2 == 0 || p < 0) ? u(rng) : z[static_cast<std::size_t>(p)] * u(rng);
    }
    const double r = PathReg(z, h);
    const bool mono = oracle::MonotoneAlongPaths(z, parent);
    monotone += mono;
    c.expect((r == 0.0) == mono, "continuous vector " + std::to_string(k));
    c.expect(std::abs(r - oracle::PathHinge(z, edges)) <= 1e-12, "continuous hinge " + std::to_string(k));
  }
  return c.outcome("1024 patterns (" + std::to_string(zero) + " consistent), 10^4 vectors (" +
                   std::to_string(monotone) + " monotone)");
}

// ---------------------------------------------------------------- 5

Outcome MetricOracles() {
  Checker c;
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 20, m = 1 + rng() % 10;
    std::vector<std::vector<int>> ti(n, std::vector<int>(m)), pi(n, std::vector<int>(m));
    std::vector<LabelVector> t, p;
    for (std::size_t i = 0; i < n; ++i) {
      LabelVector a(m), b(m);
      for (std::size_t v = 0; v < m; ++v) {
        ti[i][v] = static_cast<int>(rng() % 2);
        pi[i][v] = static_cast<int>(rng() % 2);
        a.set(v, ti[i][v]);
        b.set(v, pi[i][v]);
      }
      t.push_back(a);
      p.push_back(b);
    }
    const auto r = metrics::MicroMacroF1(t, p);
    const auto o = oracle::BruteF1(ti, pi);
    c.expect(r.micro_f1 == o.micro && r.macro_f1 == o.macro, "F1 trial " + std::to_string(trial));
  }
  const std::vector<double> wp = {0.9, 0.4}, wn = {0.6, 0.1};
  c.expect(metrics::ExhaustiveKs(wp, wn) == 0.5 && oracle::BruteKs(wp, wn) == 0.5, "worked KS case");
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> pos(1 + rng() % 40), neg(1 + rng() % 40);
    for (auto& x : pos) x = std::round(u(rng) * 20) / 20 + 0.1 * u(rng) * (trial % 2);
    for (auto& x : neg) x = std::round(u(rng) * 20) / 20;
    const auto r = metrics::KsStatistic(pos, neg, 2 + rng() % 15);
    c.expect(r.exhaustive_ks == oracle::BruteKs(pos, neg), "KS trial " + std::to_string(trial));
    c.expect(r.ks <= r.exhaustive_ks, "binned above exhaustive, trial " + std::to_string(trial));
  }
  return c.outcome("1000 F1 instances, 1000 KS instances");
}

// ---------------------------------------------------------------- 6, 7

// Synthetic corpus and model widths of `hmc gen-synthetic` plus the
// HMCN defaults; pretraining settings from the generated config.
constexpr std::size_t kTrain = 2000, kTest = 500;
constexpr int kSeeds = 5;

hmcl::HmclConfig SyntheticHmcl() {
  hmcl::HmclConfig cfg;
  cfg.lr = 3e-3;
  cfg.epochs = 4;
  return cfg;
}

struct SeedRun {
  double base_f1 = 0, pre_f1 = 0;
  double violations_l1 = 0, violations_l0 = 0;
  hmcl::EmbeddingDiagnostics before, after;
};

using F = float;

double TrainAndScore(HmcnModel<F>& model, const Corpus& train, const Corpus& test, const LossConfig& loss,
                     std::uint64_t seed, std::size_t* violations = nullptr) {
  TrainSchedule schedule;
  schedule.seed = seed;
  HmcnTrainer<F> trainer(model, loss, schedule);
  trainer.train(train);
  const auto e = Evaluate(model, test, loss);
  if (violations) *violations = e.violations_raw;
  return e.raw.micro_f1;
}

SeedRun RunSeed(std::uint64_t seed) {
  const auto h = App();
  const Corpus train = MakeSyntheticCorpus(h, kTrain, DeriveSeed(seed, "synthetic.train"));
  const Corpus test = MakeSyntheticCorpus(h, kTest, DeriveSeed(seed, "synthetic.test"));
  const HmcnConfig mc;
  SeedRun out;

  std::size_t v1 = 0, v0 = 0;
  {
    ad::Rng init(DeriveSeed(seed, "init"));
    HmcnModel<F> model(h, mc, init);
    out.base_f1 = TrainAndScore(model, train, test, LossConfig{}, seed, &v1);
  }
  {
    ad::Rng init(DeriveSeed(seed, "init"));
    HmcnModel<F> model(h, mc, init);
    LossConfig no_reg;
    no_reg.lambda_reg = 0.0;
    TrainAndScore(model, train, test, no_reg, seed, &v0);
  }
  {
    ad::Rng init(DeriveSeed(seed, "init"));
    HmcnModel<F> model(h, mc, init);
    const auto cfg = SyntheticHmcl();
    ad::Rng proj(DeriveSeed(seed, "hmcl.proj"));
    hmcl::ProjectionHead<F> head(mc.encoder.fields.size() * mc.encoder.d, cfg.proj_hidden, cfg.proj_dim, proj);
    hmcl::DiagnosticsOptions diag;
    diag.seed = DeriveSeed(seed, "hmcl.diagnostics");
    const auto report = hmcl::pretrain(model.encoder, head, train, cfg, seed, diag);
    out.before = report.before;
    out.after = report.after;
    out.pre_f1 = TrainAndScore(model, train, test, LossConfig{}, seed);
  }
  out.violations_l1 = static_cast<double>(v1);
  out.violations_l0 = static_cast<double>(v0);
  return out;
}

std::vector<SeedRun>& SyntheticRuns() {
  static std::vector<SeedRun> runs = [] {
    std::vector<SeedRun> r;
    for (int s = 1; s <= kSeeds; ++s) {
      r.push_back(RunSeed(static_cast<std::uint64_t>(s)));
      const auto& x = r.back();
      std::cout << "  seed " << s << ": hmcn " << Fmt(x.base_f1) << ", hmcl+hmcn " << Fmt(x.pre_f1)
                << ", alignment " << Fmt(x.before.encoder.alignment, 3) << "->" << Fmt(x.after.encoder.alignment, 3)
                << ", uniformity " << Fmt(x.before.encoder.uniformity, 3) << "->"
                << Fmt(x.after.encoder.uniformity, 3) << ", violations lambda=1 " << x.violations_l1
                << " lambda=0 " << x.violations_l0 << std::endl;
    }
    return r;
  }();
  return runs;
}

template <typename Fn>
double Mean(const std::vector<SeedRun>& runs, Fn f) {
  double s = 0;
  for (const auto& r : runs) s += f(r);
  return s / static_cast<double>(runs.size());
}

Outcome DirectionalReproduction() {
  const auto& runs = SyntheticRuns();
  Checker c;
  double min_base = 1.0;
  for (const auto& r : runs) min_base = std::min(min_base, r.base_f1);
  const double base = Mean(runs, [](const SeedRun& r) { return r.base_f1; });
  const double pre = Mean(runs, [](const SeedRun& r) { return r.pre_f1; });
  const double a0 = Mean(runs, [](const SeedRun& r) { return r.before.encoder.alignment; });
  const double a1 = Mean(runs, [](const SeedRun& r) { return r.after.encoder.alignment; });
  const double u0 = Mean(runs, [](const SeedRun& r) { return r.before.encoder.uniformity; });
  const double u1 = Mean(runs, [](const SeedRun& r) { return r.after.encoder.uniformity; });
  c.expect(min_base >= 0.90, "(a) lowest seed micro-F1 " + Fmt(min_base));
  c.expect(pre >= base, "(b) pretrained " + Fmt(pre) + " < " + Fmt(base));
  c.expect(a1 < a0, "(c) alignment " + Fmt(a0, 3) + "->" + Fmt(a1, 3));
  c.expect(u1 < u0, "(c) uniformity " + Fmt(u0, 3) + "->" + Fmt(u1, 3));
  return c.outcome("(a) min micro-F1 " + Fmt(min_base) + " (b) " + Fmt(pre) + " vs " + Fmt(base) +
                   " (c) alignment " + Fmt(a0, 3) + "->" + Fmt(a1, 3) + ", uniformity " + Fmt(u0, 3) + "->" +
                   Fmt(u1, 3) + " [encoder space, mean of " + std::to_string(kSeeds) + " seeds]");
}

Outcome ViolationRate() {
  const auto& runs = SyntheticRuns();
  const double l1 = Mean(runs, [](const SeedRun& r) { return r.violations_l1; });
  const double l0 = Mean(runs, [](const SeedRun& r) { return r.violations_l0; });
  return {l1 < l0, "mean test violations lambda=1 " + Fmt(l1, 1) + " vs lambda=0 " + Fmt(l0, 1)};
}

// ---------------------------------------------------------------- 8

int Cli(const std::string& args) {
  const std::string cmd = std::string("\"") + HMC_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file below `dir` except the timestamped log, by relative path.
std::map<std::string, std::string> Artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run.log") continue;
    out[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return out;
}

Outcome Determinism() {
  Checker c;
  const fs::path root = fs::temp_directory_path() / ("hmc_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(root);
  const std::string small =
      " --set encoder.d=16 --set model.hidden=32 --set train.epochs=3 --set hmcl.repeats=3,5,8 --set hmcl.epochs=1";
  std::size_t files = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
    const std::string cfg = "--config " + q(d / "data" / "config.ini") + small;
    const std::vector<std::string> commands = {
        "gen-synthetic --out " + q(d / "data") + " --seed 11 --train 300 --val 50 --test 100",
        "pretrain " + cfg + " --out " + q(d / "pre"),
        "train " + cfg + " --out " + q(d / "train") + " --init " + q(d / "pre" / "encoder.ckpt"),
        "eval " + cfg + " --out " + q(d / "eval") + " --checkpoint " + q(d / "train" / "model.ckpt") + " --split test",
        "infer --out " + q(d / "infer") + " --checkpoint " + q(d / "train" / "model.ckpt") + " --input " +
            q(d / "data" / "test.jsonl"),
        "sample-audit " + cfg + " --out " + q(d / "audit") + " --strategy all --anchor Game --draws 20000",
    };
    for (const auto& cmd : commands) c.expect(Cli(cmd) == 0, "exit status of: hmc " + cmd.substr(0, cmd.find(' ')));
  }
  const auto a = Artifacts(root / "a"), b = Artifacts(root / "b");
  c.expect(a.size() == b.size(), "artifact sets differ in size");
  for (const auto& [name, bytes] : a) {
    ++files;
    auto it = b.find(name);
    c.expect(it != b.end() && it->second == bytes, name + " differs");
  }
  c.expect(a.count("train/model.ckpt") && a.count("eval/eval_test.json"), "expected artifacts missing");
  std::error_code ec;
  fs::remove_all(root, ec);
  return c.outcome("6 commands run twice, " + std::to_string(files) + " artifacts compared byte for byte");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gradient oracle", 120, GradientOracle},
      {2, "sampling table", 1, SamplingTable},
      {3, "sampling distribution", 30, SamplingDistribution},
      {4, "path regularization exactness", 10, PathRegularizationExactness},
      {5, "metric oracles", 30, MetricOracles},
      // 6 and 7 share one set of synthetic runs and one 15 minute budget.
      {6, "synthetic directional reproduction", 900, DirectionalReproduction},
      {7, "violation rate", 0, ViolationRate},
      {8, "determinism", 300, Determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& cr : all) {
    if (!wanted.empty() && !wanted.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = cr.budget_s == 0 || secs <= cr.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << "criterion " << cr.id << " (" << cr.name << "): " << (pass ? "PASS" : "FAIL") << "  " << o.detail
              << "  [" << Fmt(secs, 1) << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
