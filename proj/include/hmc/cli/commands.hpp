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
// Command implementations behind the `hmc` executable. Each Run* function
// returns the process exit code:
//   0 success, 1 numeric failure, 2 input or file error,
//   3 configuration or checkpoint mismatch.
// Artifacts carry no timestamps; those go to run.log in the output
// directory, so repeated runs produce byte-identical artifacts.

#ifndef HMC_CLI_COMMANDS_HPP_
#define HMC_CLI_COMMANDS_HPP_

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmc/ad/checkpoint.hpp"
#include "hmc/cli/config.hpp"
#include "hmc/corpus.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"
#include "hmc/hmcl/contrastive.hpp"
#include "hmc/hmcl/sampling.hpp"
#include "hmc/hmcn.hpp"
#include "hmc/metrics.hpp"
#include "hmc/synthetic.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc::cli {

using Json = nlohmann::ordered_json;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string strategy;
  std::string precision;
  bool repair = false;
  std::vector<std::string> overrides;  // "section.key=value"
};

struct GenSyntheticOptions {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t train = 2000;
  std::size_t val = 0;
  std::size_t test = 500;
  SyntheticOptions synthetic;
};

struct TrainOptions {
  CommonOptions common;
  std::string init;    // encoder checkpoint from pretrain
  std::string resume;  // model checkpoint from an earlier train
};

struct EvalOptions {
  CommonOptions common;
  std::string checkpoint;
  std::string split = "test";
  std::string ks_scores;  // "score,outcome" lines
  std::size_t ks_bins = 11;
};

struct InferOptions {
  std::string checkpoint;
  std::string input;
  std::string out;  // directory, or "-" for stdout
  bool repair = false;
};

struct AuditOptions {
  CommonOptions common;
  std::size_t draws = 100000;
  std::vector<std::string> anchors;  // empty: every label with records
};

// Exit code for an error code.
inline int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteValue:
    case ErrorCode::kNonFiniteLoss:
      return 1;
    case ErrorCode::kConfigMismatch:
    case ErrorCode::kInvalidArgument:
      return 3;
    default:
      return 2;
  }
}

inline int Guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

namespace detail {

inline void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "short write to '" + path.string() + "'");
}

inline void WriteJson(const fs::path& path, const Json& j) { WriteText(path, j.dump(2) + "\n"); }

inline void LogLine(const fs::path& dir, const std::string& message) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::ofstream log(dir / "run.log", std::ios::app);
  log << stamp << ' ' << message << '\n';
}

inline fs::path PrepareOut(const RunConfig& cfg, const CommonOptions& opt) {
  fs::path out = !opt.out.empty() ? fs::path(opt.out) : cfg.resolve(cfg.out);
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "no output directory (--out or [run] out)");
  fs::create_directories(out);
  return out;
}

inline RunConfig LoadConfig(const CommonOptions& opt) {
  std::vector<std::string> overrides = opt.overrides;
  if (opt.seed) overrides.push_back("run.seed=" + std::to_string(*opt.seed));
  if (!opt.strategy.empty()) overrides.push_back("hmcl.strategy=" + opt.strategy);
  if (!opt.precision.empty()) overrides.push_back("run.precision=" + opt.precision);
  return LoadRunConfig(opt.config, overrides);
}

// Copies the effective configuration and its hash next to the artifacts.
inline void RecordConfig(const RunConfig& cfg, const fs::path& out) {
  const std::string ini = cfg.ToIni();
  WriteText(out / "config.ini", ini);
  WriteText(out / "config.hash", HexDigest(HashBytes(ini)) + "\n");
}

inline std::shared_ptr<const LabelHierarchy> LoadHierarchy(const RunConfig& cfg) {
  if (cfg.hierarchy.empty()) throw Error(ErrorCode::kInvalidArgument, "[data] hierarchy is not set");
  return std::make_shared<const LabelHierarchy>(LabelHierarchy::Load(cfg.resolve(cfg.hierarchy).string()));
}

inline Corpus LoadSplit(const RunConfig& cfg, const std::string& which,
                        std::shared_ptr<const LabelHierarchy> h) {
  const std::string& rel = which == "train" ? cfg.train : which == "val" ? cfg.val : which == "test" ? cfg.test : "";
  if (which != "train" && which != "val" && which != "test") {
    throw Error(ErrorCode::kInvalidArgument, "unknown split '" + which + "' (train|val|test)");
  }
  if (rel.empty()) throw Error(ErrorCode::kInvalidArgument, "[data] " + which + " is not set");
  CorpusOptions options;
  options.fields = cfg.model.encoder.fields;
  options.repair = cfg.repair_labels;
  return LoadCorpus(cfg.resolve(rel).string(), std::move(h), options);
}

inline Json EncoderJson(const EncoderConfig& e) {
  return Json{{"vocab_buckets", e.vocab_buckets}, {"d", e.d}, {"heads", e.heads},
              {"max_tokens", e.max_tokens}, {"fields", e.fields}};
}

inline EncoderConfig EncoderFromJson(const Json& j) {
  EncoderConfig e;
  e.vocab_buckets = j.at("vocab_buckets").get<std::size_t>();
  e.d = j.at("d").get<std::size_t>();
  e.heads = j.at("heads").get<std::size_t>();
  e.max_tokens = j.at("max_tokens").get<std::size_t>();
  e.fields = j.at("fields").get<std::vector<std::string>>();
  return e;
}

inline Json LossJson(const LossConfig& l) {
  return Json{{"focal_alpha", l.focal_alpha}, {"focal_gamma", l.focal_gamma},
              {"lambda", l.lambda_reg}, {"threshold", l.threshold}};
}

inline LossConfig LossFromJson(const Json& j) {
  LossConfig l;
  l.focal_alpha = j.at("focal_alpha").get<double>();
  l.focal_gamma = j.at("focal_gamma").get<double>();
  l.lambda_reg = j.at("lambda").get<double>();
  l.threshold = j.at("threshold").get<double>();
  return l;
}

inline std::uint64_t EncoderFingerprint(const EncoderConfig& e) { return HashBytes("encoder;" + e.canonical()); }

inline Json F1Json(const metrics::F1Report& r, std::size_t violations, const LabelHierarchy& h) {
  Json per = Json::array();
  for (LabelId v = 0; v < r.per_label.size(); ++v) {
    const auto& s = r.per_label[v];
    per.push_back(Json{{"label", h.path(v)}, {"precision", s.precision}, {"recall", s.recall},
                       {"f1", s.f1}, {"support", s.support}, {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}});
  }
  return Json{{"micro_precision", r.micro_precision}, {"micro_recall", r.micro_recall},
              {"micro_f1", r.micro_f1}, {"macro_f1", r.macro_f1},
              {"macro_f1_supported", r.macro_f1_supported}, {"tp", r.tp}, {"fp", r.fp},
              {"fn", r.fn}, {"violations", violations}, {"per_label", per}};
}

inline Json SpaceJson(const hmcl::SpaceDiagnostics& d) {
  return Json{{"alignment", d.alignment}, {"uniformity", d.uniformity},
              {"alignment_per_level", d.alignment_per_level}};
}

inline Json KsJson(const metrics::KsReport& r) {
  return Json{{"ks", r.ks}, {"exhaustive_ks", r.exhaustive_ks}, {"thresholds", r.thresholds},
              {"cdf_pos", r.cdf_pos}, {"cdf_neg", r.cdf_neg}};
}

// "score,outcome" (or whitespace separated) per line; '#' comments and a
// non-numeric header line are skipped.
inline metrics::KsReport KsFromFile(const std::string& path, std::size_t bins) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open score file '" + path + "'");
  std::vector<double> pos, neg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& c : line) {
      if (c == ',' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a) || a.front() == '#') continue;
    double score = 0.0;
    int outcome = 0;
    try {
      std::size_t used = 0;
      score = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::kMalformedLine, path + " line " + std::to_string(line_no) + ": bad score");
    }
    if (!(fields >> b) || (b != "0" && b != "1")) {
      throw Error(ErrorCode::kMalformedLine, path + " line " + std::to_string(line_no) + ": outcome must be 0 or 1");
    }
    outcome = b == "1";
    (outcome ? pos : neg).push_back(score);
  }
  return metrics::KsStatistic(pos, neg, bins);
}

// A model restored from a checkpoint plus what the checkpoint says about it.
template <typename T>
struct LoadedModel {
  std::shared_ptr<const LabelHierarchy> hierarchy;
  std::unique_ptr<HmcnModel<T>> model;
  LossConfig loss;
};

template <typename T>
LoadedModel<T> ModelFromCheckpoint(const ad::Checkpoint& ck) {
  if (ck.meta("kind") != "hmcn") {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint kind is '" + ck.meta("kind") + "', expected 'hmcn'");
  }
  LoadedModel<T> out;
  std::istringstream text(ck.meta("hierarchy"));
  out.hierarchy = std::make_shared<const LabelHierarchy>(LabelHierarchy::Parse(text));
  const Json mj = Json::parse(ck.meta("model"));
  HmcnConfig cfg;
  cfg.encoder = EncoderFromJson(mj.at("encoder"));
  cfg.hidden = mj.at("hidden").get<std::size_t>();
  out.loss = LossFromJson(Json::parse(ck.meta("loss")));
  ad::Rng rng(0);
  out.model = std::make_unique<HmcnModel<T>>(out.hierarchy, cfg, rng);
  if (out.model->fingerprint() != ck.config_hash) {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint hash does not match its own metadata");
  }
  ad::RestoreParameters(ck, out.model->parameters());
  return out;
}

template <typename T>
ad::Checkpoint ModelCheckpoint(HmcnModel<T>& model, const LossConfig& loss, HmcnTrainer<T>& trainer,
                               const std::string& init, const std::string& history) {
  ad::Checkpoint ck;
  ck.config_hash = model.fingerprint();
  ck.metadata["kind"] = "hmcn";
  ck.metadata["precision"] = std::is_same_v<T, float> ? "f32" : "f64";
  ck.metadata["hierarchy"] = model.hierarchy().ToText();
  ck.metadata["model"] = Json{{"encoder", EncoderJson(model.config().encoder)}, {"hidden", model.config().hidden}}.dump();
  ck.metadata["loss"] = LossJson(loss).dump();
  ck.metadata["init"] = init;
  ck.metadata["epochs_done"] = std::to_string(trainer.epochs_done());
  ck.metadata["adam_steps"] = std::to_string(trainer.optimizer().steps());
  ck.metadata["history"] = history;
  const auto params = model.parameters();
  ad::SaveParameters(ck, params);
  auto& m = trainer.optimizer().first_moments();
  auto& v = trainer.optimizer().second_moments();
  for (std::size_t i = 0; i < m.size(); ++i) {
    ck.add("adam.m/" + params[i]->name, m[i]);
    ck.add("adam.v/" + params[i]->name, v[i]);
  }
  return ck;
}

template <typename T>
void RestoreOptimizer(const ad::Checkpoint& ck, HmcnModel<T>& model, HmcnTrainer<T>& trainer) {
  const auto steps = std::stoull(ck.meta("adam_steps"));
  trainer.set_epochs_done(std::stoull(ck.meta("epochs_done")));
  if (steps == 0) return;
  std::vector<ad::Tensor<T>> m, v;
  for (auto* p : model.parameters()) {
    m.emplace_back(p->value.rows(), p->value.cols());
    v.emplace_back(p->value.rows(), p->value.cols());
    ck.restore("adam.m/" + p->name, m.back());
    ck.restore("adam.v/" + p->name, v.back());
  }
  trainer.optimizer().restore(steps, std::move(m), std::move(v));
}

template <typename T>
const char* PrecisionName() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

template <typename T>
int Pretrain(const RunConfig& cfg, const fs::path& out) {
  const std::uint64_t seed = cfg.require_seed();
  auto h = LoadHierarchy(cfg);
  Corpus train = LoadSplit(cfg, "train", h);
  // Same initial encoder as a `train` run with this seed.
  ad::Rng init_rng(DeriveSeed(seed, "init"));
  HmcnModel<T> model(h, cfg.model, init_rng);
  ad::Rng proj_rng(DeriveSeed(seed, "hmcl.proj"));
  hmcl::ProjectionHead<T> head(cfg.model.encoder.fields.size() * cfg.model.encoder.d, cfg.hmcl.proj_hidden,
                               cfg.hmcl.proj_dim, proj_rng);
  hmcl::DiagnosticsOptions diag = cfg.diagnostics;
  diag.seed = DeriveSeed(seed, "hmcl.diagnostics");
  const auto report = hmcl::pretrain(model.encoder, head, train, cfg.hmcl, seed, diag);

  ad::Checkpoint ck;
  ck.config_hash = EncoderFingerprint(cfg.model.encoder);
  ck.metadata["kind"] = "encoder";
  ck.metadata["precision"] = PrecisionName<T>();
  ck.metadata["encoder"] = EncoderJson(cfg.model.encoder).dump();
  ck.metadata["strategy"] = hmcl::StrategyName(cfg.hmcl.strategy);
  ad::ParameterList<T> params;
  model.encoder.collect(params);
  ad::SaveParameters(ck, params);
  ck.Save((out / "encoder.ckpt").string());

  Json j;
  j["strategy"] = hmcl::StrategyName(cfg.hmcl.strategy);
  j["precision"] = PrecisionName<T>();
  j["batches"] = report.batches;
  j["objective_first"] = report.batch_objective.empty() ? 0.0 : report.batch_objective.front();
  j["objective_last"] = report.batch_objective.empty() ? 0.0 : report.batch_objective.back();
  j["alignment_before"] = report.before.encoder.alignment;
  j["alignment_after"] = report.after.encoder.alignment;
  j["uniformity_before"] = report.before.encoder.uniformity;
  j["uniformity_after"] = report.after.encoder.uniformity;
  j["diagnostics"] = Json{{"tau", diag.tau},
                          {"alignment_pairs", diag.alignment_pairs},
                          {"before", Json{{"encoder", SpaceJson(report.before.encoder)},
                                          {"projection", SpaceJson(report.before.projection)}}},
                          {"after", Json{{"encoder", SpaceJson(report.after.encoder)},
                                         {"projection", SpaceJson(report.after.projection)}}}};
  j["sampling"] = Json{{"negatives_drawn", report.counters.negatives_drawn},
                       {"empty_label_space", report.counters.empty_label_space},
                       {"empty_pool_redraws", report.counters.empty_pool_redraws},
                       {"skipped_empty_pool", report.counters.skipped_empty_pool}};
  WriteJson(out / "pretrain_report.json", j);
  return 0;
}

template <typename T>
int Train(const RunConfig& cfg, const TrainOptions& opt, const fs::path& out) {
  const std::uint64_t seed = cfg.require_seed();
  auto h = LoadHierarchy(cfg);
  Corpus train = LoadSplit(cfg, "train", h);
  std::optional<Corpus> val;
  if (!cfg.val.empty()) val = LoadSplit(cfg, "val", h);

  ad::Rng init_rng(DeriveSeed(seed, "init"));
  HmcnModel<T> model(h, cfg.model, init_rng);
  HmcnTrainer<T> trainer(model, cfg.loss, cfg.schedule);
  std::string init = "random";
  std::string history;
  if (!opt.resume.empty()) {
    const auto ck = ad::Checkpoint::Load(opt.resume);
    if (ck.meta("kind") != "hmcn" || ck.config_hash != model.fingerprint()) {
      throw Error(ErrorCode::kConfigMismatch, "'" + opt.resume + "' was trained with a different model configuration or hierarchy");
    }
    if (ck.meta("precision") != PrecisionName<T>()) {
      throw Error(ErrorCode::kConfigMismatch, "'" + opt.resume + "' has precision " + ck.meta("precision"));
    }
    ad::RestoreParameters(ck, model.parameters());
    RestoreOptimizer(ck, model, trainer);
    init = ck.meta("init");
    history = ck.meta("history");
  } else if (!opt.init.empty()) {
    const auto ck = ad::Checkpoint::Load(opt.init);
    if (ck.meta("kind") != "encoder" || ck.config_hash != EncoderFingerprint(cfg.model.encoder)) {
      throw Error(ErrorCode::kConfigMismatch, "'" + opt.init + "' does not hold an encoder for this [encoder] configuration");
    }
    ad::ParameterList<T> params;
    model.encoder.collect(params);
    ad::RestoreParameters(ck, params);
    init = "pretrained";
  }

  trainer.train(train, val ? &*val : nullptr, [&](const EpochStats& e) {
    Json line{{"epoch", e.epoch}, {"init", init}, {"lr", e.lr}, {"loss", e.loss},
              {"micro_f1", e.micro_f1}, {"macro_f1", e.macro_f1}, {"violations", e.violations},
              {"metrics_split", val ? "val" : "train"}};
    history += line.dump() + "\n";
  });

  ModelCheckpoint(model, cfg.loss, trainer, init, history).Save((out / "model.ckpt").string());
  WriteText(out / "history.jsonl", history);
  const EvalSummary final_train = Evaluate(model, train, cfg.loss);
  Json j{{"init", init}, {"precision", PrecisionName<T>()}, {"epochs", trainer.epochs_done()},
         {"train_micro_f1", final_train.raw.micro_f1}, {"train_macro_f1", final_train.raw.macro_f1},
         {"train_violations", final_train.violations_raw}};
  WriteJson(out / "train_report.json", j);
  return 0;
}

template <typename T>
int Eval(const RunConfig& cfg, const EvalOptions& opt, const ad::Checkpoint& ck, const fs::path& out) {
  auto loaded = ModelFromCheckpoint<T>(ck);
  if (!cfg.hierarchy.empty()) {
    auto h = LoadHierarchy(cfg);
    if (cfg.model.fingerprint(*h) != ck.config_hash) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint '" + opt.checkpoint + "' does not match the configured model or hierarchy");
    }
  }
  Corpus split = LoadSplit(cfg, opt.split, loaded.hierarchy);
  const auto scores = PredictScores(*loaded.model, split);
  const EvalSummary s = EvaluateScores(scores, split, loaded.loss.threshold);
  const auto& h = *loaded.hierarchy;
  Json j;
  j["split"] = opt.split;
  j["records"] = split.size();
  j["threshold"] = loaded.loss.threshold;
  j["primary"] = opt.common.repair ? "repaired" : "raw";
  const auto& primary = opt.common.repair ? s.repaired : s.raw;
  j["micro_f1"] = primary.micro_f1;
  j["macro_f1"] = primary.macro_f1;
  j["violations"] = opt.common.repair ? s.violations_repaired : s.violations_raw;
  j["raw"] = F1Json(s.raw, s.violations_raw, h);
  j["repaired"] = F1Json(s.repaired, s.violations_repaired, h);
  if (!opt.ks_scores.empty()) j["ks"] = KsJson(KsFromFile(opt.ks_scores, opt.ks_bins));
  WriteJson(out / ("eval_" + opt.split + ".json"), j);
  return 0;
}

inline std::string FormatScore(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

template <typename T>
int Infer(const InferOptions& opt, const ad::Checkpoint& ck, std::ostream& err) {
  auto loaded = ModelFromCheckpoint<T>(ck);
  const auto& h = *loaded.hierarchy;
  std::ifstream in(opt.input);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open input '" + opt.input + "'");
  std::ofstream file;
  std::ostream* sink = &std::cout;
  if (opt.out != "-") {
    fs::create_directories(opt.out);
    file.open(fs::path(opt.out) / "predictions.jsonl", std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::kIoError, "cannot write predictions in '" + opt.out + "'");
    sink = &file;
  }
  CorpusOptions options;
  options.fields = loaded.model->config().encoder.fields;
  options.ignore_labels = true;
  std::string line;
  std::size_t line_no = 0, skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Record r = ParseRecord(line, h, options, line_no);
      const auto z = PredictScores(*loaded.model, r);
      const LabelVector y = ThresholdScores(z, loaded.loss.threshold, h, opt.repair);
      // Scores are printed rounded so the text is stable across compilers.
      std::string text = "{\"id\":" + Json(r.id).dump() + ",\"labels\":[";
      bool first = true;
      for (LabelId v : y.active()) {
        text += (first ? "" : ",") + Json(h.path(v)).dump();
        first = false;
      }
      text += "],\"scores\":{";
      for (LabelId v = 0; v < h.size(); ++v) {
        text += (v ? "," : "") + Json(h.path(v)).dump() + ":" + FormatScore(z[v]);
      }
      *sink << text << "}}\n";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedLine && e.code() != ErrorCode::kAllFieldsEmpty) throw;
      ++skipped;
      err << "warning: skipped input line " << line_no << ": " << e.what() << '\n';
    }
  }
  sink->flush();
  if (skipped > 0) {
    err << "error: " << skipped << " input line(s) skipped\n";
    return 2;
  }
  return 0;
}

}  // namespace detail

inline int RunGenSynthetic(const GenSyntheticOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    if (!opt.seed) throw Error(ErrorCode::kInvalidArgument, "--seed is required");
    if (opt.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
    const fs::path out(opt.out);
    fs::create_directories(out);
    auto h = std::make_shared<const LabelHierarchy>(AppStoreExampleHierarchy());
    detail::WriteText(out / "hierarchy.tsv", h->ToText());
    auto write_split = [&](const std::string& name, std::size_t n) {
      if (n == 0) return;
      SyntheticOptions o = opt.synthetic;
      o.id_prefix = name + "-";
      const Corpus c = MakeSyntheticCorpus(h, n, DeriveSeed(*opt.seed, "synthetic." + name), o);
      std::ostringstream text;
      WriteCorpus(text, c);
      detail::WriteText(out / (name + ".jsonl"), text.str());
    };
    write_split("train", opt.train);
    write_split("val", opt.val);
    write_split("test", opt.test);
    std::ostringstream ini;
    ini << "[data]\nhierarchy = hierarchy.tsv\n";
    if (opt.train) ini << "train = train.jsonl\n";
    if (opt.val) ini << "val = val.jsonl\n";
    if (opt.test) ini << "test = test.jsonl\n";
    // A from-scratch encoder needs a much larger step and more passes than
    // the defaults, which assume an already trained text model.
    ini << "\n[hmcl]\nlr = 0.003\nepochs = 4\n\n[run]\nseed = " << *opt.seed << "\n";
    detail::WriteText(out / "config.ini", ini.str());
    detail::LogLine(out, "gen-synthetic seed=" + std::to_string(*opt.seed));
    return 0;
  }, err);
}

inline int RunPretrain(const CommonOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    const RunConfig cfg = detail::LoadConfig(opt);
    const fs::path out = detail::PrepareOut(cfg, opt);
    detail::RecordConfig(cfg, out);
    detail::LogLine(out, "pretrain start");
    const int rc = cfg.precision == "f64" ? detail::Pretrain<double>(cfg, out) : detail::Pretrain<float>(cfg, out);
    detail::LogLine(out, "pretrain done");
    return rc;
  }, err);
}

inline int RunTrain(const TrainOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    const RunConfig cfg = detail::LoadConfig(opt.common);
    const fs::path out = detail::PrepareOut(cfg, opt.common);
    detail::RecordConfig(cfg, out);
    detail::LogLine(out, "train start");
    const int rc = cfg.precision == "f64" ? detail::Train<double>(cfg, opt, out) : detail::Train<float>(cfg, opt, out);
    detail::LogLine(out, "train done");
    return rc;
  }, err);
}

inline int RunEval(const EvalOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    if (opt.checkpoint.empty()) {
      // KS only.
      if (opt.ks_scores.empty()) throw Error(ErrorCode::kInvalidArgument, "eval needs --checkpoint or --ks-scores");
      const Json j{{"ks", detail::KsJson(detail::KsFromFile(opt.ks_scores, opt.ks_bins))}};
      if (opt.common.out.empty() || opt.common.out == "-") {
        std::cout << j.dump(2) << '\n';
      } else {
        fs::create_directories(opt.common.out);
        detail::WriteJson(fs::path(opt.common.out) / "ks.json", j);
      }
      return 0;
    }
    const RunConfig cfg = detail::LoadConfig(opt.common);
    const fs::path out = detail::PrepareOut(cfg, opt.common);
    detail::RecordConfig(cfg, out);
    const auto ck = ad::Checkpoint::Load(opt.checkpoint);
    detail::LogLine(out, "eval " + opt.split);
    return ck.meta("precision") == "f64" ? detail::Eval<double>(cfg, opt, ck, out)
                                         : detail::Eval<float>(cfg, opt, ck, out);
  }, err);
}

inline int RunInfer(const InferOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    if (opt.checkpoint.empty() || opt.input.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "infer needs --checkpoint and --input");
    }
    if (opt.out.empty()) throw Error(ErrorCode::kInvalidArgument, "infer needs --out (directory or -)");
    const auto ck = ad::Checkpoint::Load(opt.checkpoint);
    const int rc = ck.meta("precision") == "f64" ? detail::Infer<double>(opt, ck, err)
                                                 : detail::Infer<float>(opt, ck, err);
    if (opt.out != "-") detail::LogLine(opt.out, "infer " + opt.input);
    return rc;
  }, err);
}

inline int RunSampleAudit(const AuditOptions& opt, std::ostream& err = std::cerr) {
  return Guarded([&] {
    const RunConfig cfg = detail::LoadConfig(opt.common);
    const std::uint64_t seed = cfg.require_seed();
    const fs::path out = detail::PrepareOut(cfg, opt.common);
    detail::RecordConfig(cfg, out);
    auto h = detail::LoadHierarchy(cfg);
    const Corpus corpus = detail::LoadSplit(cfg, "train", h);
    hmcl::NegativeSampler sampler(corpus, cfg.hmcl.strategy);
    std::vector<LabelId> anchors;
    if (opt.anchors.empty()) {
      for (LabelId v = 0; v < h->size(); ++v) {
        if (!corpus.with_label(v).empty()) anchors.push_back(v);
      }
    } else {
      for (const auto& a : opt.anchors) anchors.push_back(h->id(a));
    }
    hmcl::Rng rng(DeriveSeed(seed, "audit"));
    std::ostringstream csv;
    csv << "anchor_label,negative_label,label_stage_count,label_stage_freq,instance_stage_count,"
           "instance_stage_freq\n";
    for (LabelId v : anchors) {
      const auto audit = hmcl::AuditNegatives(sampler, v, opt.draws, rng);
      for (const auto& row : audit.rows) {
        csv << h->path(v) << ',' << h->path(row.negative_label) << ',' << row.label_stage_count << ','
            << detail::FormatScore(static_cast<double>(row.label_stage_count) / static_cast<double>(opt.draws))
            << ',' << row.instance_stage_count << ','
            << detail::FormatScore(static_cast<double>(row.instance_stage_count) / static_cast<double>(opt.draws))
            << '\n';
      }
    }
    detail::WriteText(out / (std::string("sample_audit_") + hmcl::StrategyName(cfg.hmcl.strategy) + ".csv"), csv.str());
    detail::LogLine(out, "sample-audit " + std::string(hmcl::StrategyName(cfg.hmcl.strategy)));
    return 0;
  }, err);
}

}  // namespace hmc::cli

#endif  // HMC_CLI_COMMANDS_HPP_
