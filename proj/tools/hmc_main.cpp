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

#include <CLI11.hpp>

#include "hmc/cli/commands.hpp"

namespace {

void AddCommon(CLI::App* cmd, hmc::cli::CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI run configuration");
  cmd->add_option("--seed", o.seed, "run seed (overrides [run] seed)");
  cmd->add_option("--out", o.out, "output directory (overrides [run] out)");
  cmd->add_option("--strategy", o.strategy, "negative sampling: all | level | sibling");
  cmd->add_option("--precision", o.precision, "f32 | f64");
  cmd->add_flag("--repair", o.repair, "report hierarchy-repaired predictions as primary");
  cmd->add_option("--set", o.overrides, "override a config key: section.key=value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multilabel classification with contrastive pretraining"};
  app.require_subcommand(1);

  hmc::cli::GenSyntheticOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a seeded synthetic dataset and config");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->required();
  gen_cmd->add_option("--train", gen.train, "training records");
  gen_cmd->add_option("--val", gen.val, "validation records");
  gen_cmd->add_option("--test", gen.test, "test records");
  gen_cmd->add_option("--label-word-dropout", gen.synthetic.label_word_dropout, "chance a label word becomes noise");
  gen_cmd->add_option("--distractor-rate", gen.synthetic.distractor_rate, "chance of an unrelated label word");

  hmc::cli::CommonOptions pretrain;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pretraining of the encoder");
  AddCommon(pretrain_cmd, pretrain);

  hmc::cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train the classifier");
  AddCommon(train_cmd, train.common);
  train_cmd->add_option("--init", train.init, "encoder checkpoint written by pretrain");
  train_cmd->add_option("--resume", train.resume, "model checkpoint to continue from");

  hmc::cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model checkpoint on a split");
  AddCommon(eval_cmd, eval.common);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint");
  eval_cmd->add_option("--split", eval.split, "train | val | test");
  eval_cmd->add_option("--ks-scores", eval.ks_scores, "score,outcome file for the KS statistic");
  eval_cmd->add_option("--ks-bins", eval.ks_bins, "equal-count bins for KS thresholds");

  hmc::cli::InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "predict labels for a JSON-lines record file");
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "model checkpoint")->required();
  infer_cmd->add_option("--input", infer.input, "records, one JSON object per line")->required();
  infer_cmd->add_option("--out", infer.out, "output directory, or - for stdout")->required();
  infer_cmd->add_flag("--repair", infer.repair, "drop labels whose parent is inactive");

  hmc::cli::AuditOptions audit;
  auto* audit_cmd = app.add_subcommand("sample-audit", "tabulate negative-sampling frequencies");
  AddCommon(audit_cmd, audit.common);
  audit_cmd->add_option("--draws", audit.draws, "draws per anchor label");
  audit_cmd->add_option("--anchor", audit.anchors, "anchor label (repeatable; default all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  if (*gen_cmd) return hmc::cli::RunGenSynthetic(gen);
  if (*pretrain_cmd) return hmc::cli::RunPretrain(pretrain);
  if (*train_cmd) return hmc::cli::RunTrain(train);
  if (*eval_cmd) return hmc::cli::RunEval(eval);
  if (*infer_cmd) return hmc::cli::RunInfer(infer);
  if (*audit_cmd) return hmc::cli::RunSampleAudit(audit);
  return 3;
}
