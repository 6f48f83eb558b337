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

#ifndef HMC_CORPUS_HPP_
#define HMC_CORPUS_HPP_

#include <cstddef>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hmc/error.hpp"
#include "hmc/taxonomy.hpp"

namespace hmc {

inline std::vector<std::string> DefaultFieldNames() { return {"name", "description", "comments"}; }

struct Record {
  std::string id;
  std::vector<std::string> fields;  // aligned with Corpus::field_names()
  LabelVector labels;
};

struct CorpusOptions {
  std::vector<std::string> fields = DefaultFieldNames();
  // Activate missing ancestors instead of rejecting the record.
  bool repair = false;
  // Inference input: "labels" may be absent and is not read.
  bool ignore_labels = false;
};

// Active / inactive labels of one record at one level.
struct LevelSplit {
  std::vector<LabelId> positive;
  std::vector<LabelId> negative;
};

class Corpus {
 public:
  Corpus(std::shared_ptr<const LabelHierarchy> hierarchy, std::vector<std::string> field_names)
      : hierarchy_(std::move(hierarchy)),
        field_names_(std::move(field_names)),
        by_label_(hierarchy_->size()) {
    if (field_names_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty field list");
  }

  // Appends a record; labels must be path-consistent and at least one field
  // must be non-empty.
  void add(Record record) {
    const auto& h = *hierarchy_;
    h.check_length(record.labels.size());
    if (record.fields.size() != field_names_.size()) {
      throw Error(ErrorCode::kShapeMismatch, "record '" + record.id + "' has " +
                                                 std::to_string(record.fields.size()) + " fields");
    }
    bool any = false;
    for (const auto& f : record.fields) any = any || !f.empty();
    if (!any) throw Error(ErrorCode::kMalformedLine, "record '" + record.id + "' has no text");
    if (auto bad = h.validate_assignment(record.labels); !bad.empty()) {
      throw Error(ErrorCode::kPathViolation, "record '" + record.id + "': '" +
                                                 h.path(bad.front().child) + "' active without '" +
                                                 h.path(bad.front().parent) + "'");
    }
    const std::size_t i = records_.size();
    for (LabelId v : record.labels.active()) by_label_[v].push_back(i);
    records_.push_back(std::move(record));
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_.at(i); }
  const std::vector<Record>& records() const { return records_; }
  const LabelHierarchy& hierarchy() const { return *hierarchy_; }
  const std::shared_ptr<const LabelHierarchy>& hierarchy_ptr() const { return hierarchy_; }
  const std::vector<std::string>& field_names() const { return field_names_; }

  // X_v: indices of records with label v active, ascending.
  const std::vector<std::size_t>& with_label(LabelId v) const { return by_label_.at(v); }

  LevelSplit active_labels_at_level(std::size_t i, int level) const {
    if (i >= records_.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "record " + std::to_string(i));
    }
    LevelSplit split;
    for (LabelId v : hierarchy_->labels_at_level(level)) {
      (records_[i].labels[v] ? split.positive : split.negative).push_back(v);
    }
    return split;
  }

 private:
  std::shared_ptr<const LabelHierarchy> hierarchy_;
  std::vector<std::string> field_names_;
  std::vector<Record> records_;
  std::vector<std::vector<std::size_t>> by_label_;
};

inline Record CheckFields(Record r, const std::string& where) {
  bool any = false;
  for (const auto& f : r.fields) any = any || !f.empty();
  if (!any) throw Error(ErrorCode::kMalformedLine, where + ": all fields empty");
  return r;
}

// Parses one record line. `line_no` only decorates error messages.
inline Record ParseRecord(const std::string& line, const LabelHierarchy& h,
                          const CorpusOptions& options, std::size_t line_no = 0) {
  const std::string where = "line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, where + ": " + e.what());
  }
  const bool need_labels = !options.ignore_labels;
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("fields") ||
      !j["fields"].is_object() ||
      (need_labels && (!j.contains("labels") || !j["labels"].is_array()))) {
    throw Error(ErrorCode::kMalformedLine,
                where + ": expected {\"id\": str, \"fields\": {...}, \"labels\": [...]}");
  }
  Record r;
  r.id = j["id"].get<std::string>();
  for (const auto& name : options.fields) {
    auto it = j["fields"].find(name);
    if (it == j["fields"].end() || it->is_null()) {
      r.fields.emplace_back();
    } else if (it->is_string()) {
      r.fields.push_back(it->get<std::string>());
    } else {
      throw Error(ErrorCode::kMalformedLine, where + ": field '" + name + "' is not a string");
    }
  }
  r.labels = LabelVector(h.size());
  if (!need_labels) return CheckFields(r, where);
  for (const auto& l : j["labels"]) {
    if (!l.is_string()) throw Error(ErrorCode::kMalformedLine, where + ": label is not a string");
    const auto name = l.get<std::string>();
    if (!h.contains(name)) throw Error(ErrorCode::kUnknownLabel, where + ": '" + name + "'");
    r.labels.set(h.id(name));
  }
  if (options.repair) {
    r.labels = h.path_closure(r.labels);
  } else if (auto bad = h.validate_assignment(r.labels); !bad.empty()) {
    throw Error(ErrorCode::kPathViolation, where + ": '" + h.path(bad.front().child) +
                                               "' active without '" +
                                               h.path(bad.front().parent) + "'");
  }
  return CheckFields(r, where);
}

inline nlohmann::ordered_json RecordToJson(const Record& r, const LabelHierarchy& h,
                                           const std::vector<std::string>& field_names) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < field_names.size(); ++f) fields[field_names[f]] = r.fields[f];
  j["fields"] = fields;
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (LabelId v : r.labels.active()) labels.push_back(h.path(v));
  j["labels"] = labels;
  return j;
}

inline Corpus ReadCorpus(std::istream& in, std::shared_ptr<const LabelHierarchy> h,
                         const CorpusOptions& options = {}) {
  Corpus corpus(h, options.fields);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    corpus.add(ParseRecord(line, *h, options, line_no));
  }
  return corpus;
}

inline Corpus LoadCorpus(const std::string& path, std::shared_ptr<const LabelHierarchy> h,
                         const CorpusOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open record file '" + path + "'");
  try {
    return ReadCorpus(in, std::move(h), options);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + std::string(e.what()));
  }
}

inline void WriteCorpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records()) {
    out << RecordToJson(r, corpus.hierarchy(), corpus.field_names()).dump() << '\n';
  }
}

}  // namespace hmc

#endif  // HMC_CORPUS_HPP_
