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
// Single-parent label taxonomy.
//
// Labels are identified by the strings used in the hierarchy file. The
// implicit root (token `ROOT`) is never a label. Labels are numbered
// level-major: every level-1 label precedes every level-2 label, and inside a
// level the order is first appearance in the edge list. This numbering is the
// coordinate order of every LabelVector and of every prediction vector.

#ifndef HMC_TAXONOMY_HPP_
#define HMC_TAXONOMY_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hmc/error.hpp"

namespace hmc {

using LabelId = std::size_t;

inline constexpr std::string_view kRootToken = "ROOT";

// Binary assignment over the m labels of a hierarchy.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::size_t m) : bits_(m, 0) {}
  explicit LabelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  bool operator[](LabelId v) const { return bits_[v] != 0; }
  void set(LabelId v, bool on = true) { bits_[v] = on ? 1 : 0; }

  std::size_t popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }

  std::vector<LabelId> active() const {
    std::vector<LabelId> out;
    for (LabelId v = 0; v < bits_.size(); ++v) {
      if (bits_[v]) out.push_back(v);
    }
    return out;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct PathViolation {
  LabelId parent;
  LabelId child;
  friend bool operator==(const PathViolation&, const PathViolation&) = default;
};

class LabelHierarchy {
 public:
  using Edge = std::pair<std::string, std::string>;

  // Builds a hierarchy from (parent, child) pairs. `ROOT` as parent marks a
  // top-level label. Throws DuplicateParent, CycleDetected or UnknownLabel.
  static LabelHierarchy FromEdges(const std::vector<Edge>& edges) {
    std::vector<std::string> order;  // first appearance as child
    std::unordered_map<std::string, std::string> parent_of;
    for (const auto& [parent, child] : edges) {
      if (child == kRootToken) {
        throw Error(ErrorCode::kCycleDetected, "ROOT cannot be a child");
      }
      if (parent == child) {
        throw Error(ErrorCode::kCycleDetected, "self loop on '" + child + "'");
      }
      auto it = parent_of.find(child);
      if (it != parent_of.end()) {
        if (it->second != parent) {
          throw Error(ErrorCode::kDuplicateParent,
                      "'" + child + "' listed under '" + it->second + "' and '" + parent + "'");
        }
        continue;
      }
      parent_of.emplace(child, parent);
      order.push_back(child);
    }
    for (const auto& [parent, child] : edges) {
      if (parent != kRootToken && !parent_of.count(parent)) {
        throw Error(ErrorCode::kUnknownLabel, "parent '" + parent + "' is never declared");
      }
    }

    // Depth by walking parent chains; a chain longer than the label count
    // can only come from a cycle.
    std::unordered_map<std::string, int> depth;
    for (const auto& name : order) {
      int d = 0;
      std::string cur = name;
      while (cur != kRootToken) {
        if (auto hit = depth.find(cur); hit != depth.end()) {
          d += hit->second;
          break;
        }
        ++d;
        if (d > static_cast<int>(order.size())) {
          throw Error(ErrorCode::kCycleDetected, "cycle through '" + name + "'");
        }
        cur = parent_of.at(cur);
      }
      depth[name] = d;
    }

    LabelHierarchy h;
    int max_depth = 0;
    for (const auto& name : order) max_depth = std::max(max_depth, depth.at(name));
    h.levels_.assign(static_cast<std::size_t>(max_depth), {});
    for (int level = 1; level <= max_depth; ++level) {
      for (const auto& name : order) {
        if (depth.at(name) != level) continue;
        LabelId id = h.names_.size();
        h.names_.push_back(name);
        h.level_of_.push_back(level);
        h.index_in_level_.push_back(h.levels_[level - 1].size());
        h.levels_[level - 1].push_back(id);
        h.by_name_.emplace(name, id);
      }
    }
    const std::size_t m = h.names_.size();
    h.parent_.assign(m, std::nullopt);
    h.children_.assign(m, {});
    h.paths_.assign(m, {});
    for (LabelId v = 0; v < m; ++v) {
      const std::string& p = parent_of.at(h.names_[v]);
      if (p == kRootToken) {
        h.top_.push_back(v);
        h.paths_[v] = h.names_[v];
      } else {
        LabelId pid = h.by_name_.at(p);
        h.parent_[v] = pid;
        h.children_[pid].push_back(v);
        h.paths_[v] = h.paths_[pid] + "/" + h.names_[v];
      }
    }
    for (LabelId v = 0; v < m; ++v) h.by_path_.emplace(h.paths_[v], v);
    return h;
  }

  // Parses `parent<TAB>child` lines; `#` lines and blank lines are skipped.
  static LabelHierarchy Parse(std::istream& in) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos ||
          tab == 0 || tab + 1 == line.size()) {
        throw Error(ErrorCode::kMalformedLine,
                    "hierarchy line " + std::to_string(line_no) + ": expected parent<TAB>child");
      }
      edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return FromEdges(edges);
  }

  static LabelHierarchy Load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open hierarchy file '" + path + "'");
    return Parse(in);
  }

  // Edge-list text that reproduces this hierarchy (level-major order).
  std::string ToText() const {
    std::ostringstream out;
    for (LabelId v = 0; v < size(); ++v) {
      out << (parent_[v] ? names_[*parent_[v]] : std::string(kRootToken)) << '\t' << names_[v]
          << '\n';
    }
    return out.str();
  }

  std::size_t size() const { return names_.size(); }
  int depth() const { return static_cast<int>(levels_.size()); }

  // Resolves either a label identifier or a full "/"-joined path.
  LabelId id(std::string_view name) const {
    std::string key(name);
    if (auto it = by_name_.find(key); it != by_name_.end()) return it->second;
    if (auto it = by_path_.find(key); it != by_path_.end()) return it->second;
    throw Error(ErrorCode::kUnknownLabel, "'" + key + "'");
  }
  bool contains(std::string_view name) const {
    std::string key(name);
    return by_name_.count(key) || by_path_.count(key);
  }

  const std::string& name(LabelId v) const { return names_[check(v)]; }
  const std::string& path(LabelId v) const { return paths_[check(v)]; }
  int level(LabelId v) const { return level_of_[check(v)]; }
  std::size_t index_in_level(LabelId v) const { return index_in_level_[check(v)]; }
  std::optional<LabelId> parent(LabelId v) const { return parent_.at(check(v)); }
  const std::vector<LabelId>& children(LabelId v) const { return children_.at(check(v)); }
  const std::vector<LabelId>& top_level() const { return top_; }

  const std::vector<LabelId>& labels_at_level(int level) const {
    if (level < 1 || level > depth()) {
      throw Error(ErrorCode::kLevelOutOfRange,
                  "level " + std::to_string(level) + " not in [1, " + std::to_string(depth()) + "]");
    }
    return levels_[static_cast<std::size_t>(level - 1)];
  }

  // First coordinate of level `level` in the level-major ordering.
  std::size_t level_offset(int level) const {
    return labels_at_level(level).front();
  }

  std::vector<LabelId> siblings_of(LabelId v) const {
    const auto& pool = parent_[check(v)] ? children_[*parent_[v]] : top_;
    std::vector<LabelId> out;
    for (LabelId u : pool) {
      if (u != v) out.push_back(u);
    }
    return out;
  }

  // Nearest first; root excluded.
  std::vector<LabelId> ancestors_of(LabelId v) const {
    std::vector<LabelId> out;
    for (auto p = parent_[check(v)]; p; p = parent_[*p]) out.push_back(*p);
    return out;
  }

  // Breadth-first below v.
  std::vector<LabelId> descendants_of(LabelId v) const {
    std::vector<LabelId> out(children_[check(v)]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& kids = children_[out[i]];
      out.insert(out.end(), kids.begin(), kids.end());
    }
    return out;
  }

  bool is_ancestor(LabelId a, LabelId v) const {
    for (auto p = parent_[check(v)]; p; p = parent_[*p]) {
      if (*p == a) return true;
    }
    return false;
  }

  // Parent-child pairs among non-root labels, in child order.
  std::vector<PathViolation> edges() const {
    std::vector<PathViolation> out;
    for (LabelId v = 0; v < size(); ++v) {
      if (parent_[v]) out.push_back({*parent_[v], v});
    }
    return out;
  }

  // Every (parent, child) with the child active and the parent inactive.
  std::vector<PathViolation> validate_assignment(const LabelVector& y) const {
    check_length(y.size());
    std::vector<PathViolation> out;
    for (LabelId v = 0; v < size(); ++v) {
      if (y[v] && parent_[v] && !y[*parent_[v]]) out.push_back({*parent_[v], v});
    }
    return out;
  }

  // Activates every ancestor of every active label.
  LabelVector path_closure(const LabelVector& y) const {
    check_length(y.size());
    LabelVector out = y;
    // Children come after parents in level-major order, so a reverse sweep
    // propagates activation all the way up.
    for (LabelId v = size(); v-- > 0;) {
      if (out[v] && parent_[v]) out.set(*parent_[v]);
    }
    return out;
  }

  // Deactivates every label whose parent ends up inactive (top-down).
  LabelVector prune_orphans(const LabelVector& y) const {
    check_length(y.size());
    LabelVector out = y;
    for (LabelId v = 0; v < size(); ++v) {
      if (out[v] && parent_[v] && !out[*parent_[v]]) out.set(v, false);
    }
    return out;
  }

  void check_length(std::size_t n) const {
    if (n != size()) {
      throw Error(ErrorCode::kLengthMismatch,
                  "vector of length " + std::to_string(n) + ", hierarchy has " +
                      std::to_string(size()) + " labels");
    }
  }

 private:
  LabelId check(LabelId v) const {
    if (v >= size()) throw Error(ErrorCode::kUnknownLabel, "label id " + std::to_string(v));
    return v;
  }

  std::vector<std::string> names_;
  std::vector<std::string> paths_;
  std::vector<int> level_of_;
  std::vector<std::size_t> index_in_level_;
  std::vector<std::optional<LabelId>> parent_;
  std::vector<std::vector<LabelId>> children_;
  std::vector<std::vector<LabelId>> levels_;
  std::vector<LabelId> top_;
  std::unordered_map<std::string, LabelId> by_name_;
  std::unordered_map<std::string, LabelId> by_path_;
};

// The three-level app taxonomy used throughout the examples and tests.
inline LabelHierarchy AppStoreExampleHierarchy() {
  return LabelHierarchy::FromEdges({
      {"ROOT", "Finance"},     {"ROOT", "Video"},      {"ROOT", "Game"},
      {"Finance", "Investment"}, {"Finance", "Loan"},  {"Loan", "Credit Loan"},
      {"Loan", "Mortgage Loan"}, {"Game", "Moba"},     {"Game", "RPG"},
      {"Game", "Strategy"},
  });
}

}  // namespace hmc

#endif  // HMC_TAXONOMY_HPP_
