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
// Run configuration: an INI file with [data], [encoder], [model], [loss],
// [train], [hmcl] and [run] sections. Command-line overrides are applied as
// "section.key=value" strings before the values are interpreted. Relative
// data paths resolve against the directory holding the config file.

#ifndef HMC_CLI_CONFIG_HPP_
#define HMC_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hmc/encoder.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"
#include "hmc/hmcl/contrastive.hpp"
#include "hmc/hmcn.hpp"

namespace hmc::cli {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path base_dir;
  std::string hierarchy;
  std::string train;
  std::string val;
  std::string test;
  bool repair_labels = false;
  HmcnConfig model;
  LossConfig loss;
  TrainSchedule schedule;
  hmcl::HmclConfig hmcl;
  hmcl::DiagnosticsOptions diagnostics;
  std::optional<std::uint64_t> seed;
  std::string precision = "f32";
  std::string out;
  // Effective key/value pairs, sorted; written next to run artifacts.
  std::map<std::string, std::map<std::string, std::string>> effective;

  fs::path resolve(const std::string& p) const {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  std::uint64_t require_seed() const {
    if (!seed) throw Error(ErrorCode::kInvalidArgument, "a seed is required ([run] seed or --seed)");
    return *seed;
  }

  // Canonical INI text of the effective configuration.
  std::string ToIni() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, keys] : effective) {
      out << (first ? "" : "\n") << '[' << section << "]\n";
      first = false;
      for (const auto& [k, v] : keys) out << k << " = " << v << '\n';
    }
    return out.str();
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> known = {
      {"data", {"hierarchy", "train", "val", "test", "fields", "repair_labels"}},
      {"encoder", {"vocab_buckets", "d", "heads", "max_tokens"}},
      {"model", {"hidden"}},
      {"loss", {"focal_alpha", "focal_gamma", "lambda", "threshold"}},
      {"train", {"epochs", "batch_size", "lr", "decay", "decay_every_epochs"}},
      {"hmcl",
       {"strategy", "alpha", "repeats", "batch_size", "lr", "decay", "decay_every_batches", "epochs",
        "proj_hidden", "proj_dim", "diag_tau", "diag_pairs"}},
      {"run", {"seed", "precision", "out"}},
  };
  return known;
}

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename V>
V ParseValue(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  V v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::kInvalidArgument, "bad value for " + key + ": '" + text + "'");
  }
  return v;
}

inline bool ParseBool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::kInvalidArgument, "bad boolean for " + key + ": '" + text + "'");
}

}  // namespace detail

// "section.key=value"
inline void ApplyOverride(boost::property_tree::ptree& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw Error(ErrorCode::kInvalidArgument, "override must look like section.key=value: '" + assignment + "'");
  }
  const std::string section = detail::Trim(assignment.substr(0, dot));
  const std::string key = detail::Trim(assignment.substr(dot + 1, eq - dot - 1));
  tree.put(boost::property_tree::ptree::path_type(section + "." + key, '.'),
           detail::Trim(assignment.substr(eq + 1)));
}

inline RunConfig ConfigFromTree(const boost::property_tree::ptree& tree, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  const auto& known = detail::KnownKeys();
  for (const auto& [section, keys] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw Error(ErrorCode::kInvalidArgument, "unknown config section [" + section + "]");
    for (const auto& [key, value] : keys) {
      if (!it->second.count(key)) {
        throw Error(ErrorCode::kInvalidArgument, "unknown config key " + section + "." + key);
      }
      cfg.effective[section][key] = detail::Trim(value.data());
    }
  }
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    auto s = cfg.effective.find(section);
    if (s == cfg.effective.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };
  auto num = [&]<typename V>(const std::string& section, const std::string& key, V& into) {
    if (auto v = get(section, key)) into = detail::ParseValue<V>(section + "." + key, *v);
  };

  if (auto v = get("data", "hierarchy")) cfg.hierarchy = *v;
  if (auto v = get("data", "train")) cfg.train = *v;
  if (auto v = get("data", "val")) cfg.val = *v;
  if (auto v = get("data", "test")) cfg.test = *v;
  if (auto v = get("data", "fields")) cfg.model.encoder.fields = detail::SplitList(*v);
  if (auto v = get("data", "repair_labels")) cfg.repair_labels = detail::ParseBool("data.repair_labels", *v);

  num("encoder", "vocab_buckets", cfg.model.encoder.vocab_buckets);
  num("encoder", "d", cfg.model.encoder.d);
  num("encoder", "heads", cfg.model.encoder.heads);
  num("encoder", "max_tokens", cfg.model.encoder.max_tokens);
  num("model", "hidden", cfg.model.hidden);

  num("loss", "focal_alpha", cfg.loss.focal_alpha);
  num("loss", "focal_gamma", cfg.loss.focal_gamma);
  num("loss", "lambda", cfg.loss.lambda_reg);
  num("loss", "threshold", cfg.loss.threshold);

  num("train", "epochs", cfg.schedule.epochs);
  num("train", "batch_size", cfg.schedule.batch_size);
  num("train", "lr", cfg.schedule.lr);
  num("train", "decay", cfg.schedule.decay);
  num("train", "decay_every_epochs", cfg.schedule.decay_every_epochs);

  if (auto v = get("hmcl", "strategy")) cfg.hmcl.strategy = hmcl::ParseStrategy(*v);
  num("hmcl", "alpha", cfg.hmcl.alpha);
  if (auto v = get("hmcl", "repeats")) {
    cfg.hmcl.repeats_per_level.clear();
    for (const auto& r : detail::SplitList(*v)) {
      cfg.hmcl.repeats_per_level.push_back(detail::ParseValue<std::size_t>("hmcl.repeats", r));
    }
  }
  num("hmcl", "batch_size", cfg.hmcl.batch_size);
  num("hmcl", "lr", cfg.hmcl.lr);
  num("hmcl", "decay", cfg.hmcl.decay);
  num("hmcl", "decay_every_batches", cfg.hmcl.decay_every_batches);
  num("hmcl", "epochs", cfg.hmcl.epochs);
  num("hmcl", "proj_hidden", cfg.hmcl.proj_hidden);
  num("hmcl", "proj_dim", cfg.hmcl.proj_dim);
  num("hmcl", "diag_tau", cfg.diagnostics.tau);
  num("hmcl", "diag_pairs", cfg.diagnostics.alignment_pairs);

  if (auto v = get("run", "seed")) cfg.seed = detail::ParseValue<std::uint64_t>("run.seed", *v);
  if (auto v = get("run", "precision")) cfg.precision = *v;
  if (auto v = get("run", "out")) cfg.out = *v;
  if (cfg.precision != "f32" && cfg.precision != "f64") {
    throw Error(ErrorCode::kInvalidArgument, "precision must be f32 or f64, got '" + cfg.precision + "'");
  }
  if (cfg.seed) cfg.schedule.seed = *cfg.seed;

  cfg.model.validate();
  cfg.loss.validate();
  cfg.hmcl.validate();
  return cfg;
}

inline RunConfig LoadRunConfig(const std::string& path, const std::vector<std::string>& overrides = {}) {
  boost::property_tree::ptree tree;
  fs::path base;
  if (!path.empty()) {
    if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "config file '" + path + "' does not exist");
    try {
      boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorCode::kMalformedLine, "config '" + path + "': " + e.message() + " at line " +
                                                 std::to_string(e.line()));
    }
    base = fs::absolute(path).parent_path();
  } else {
    base = fs::current_path();
  }
  for (const auto& o : overrides) ApplyOverride(tree, o);
  return ConfigFromTree(tree, base);
}

}  // namespace hmc::cli

#endif  // HMC_CLI_CONFIG_HPP_
