/*
 * Copyright 2026 The HDM Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hdm {

// How a leaf code is mapped to its formation.
struct FormationRule {
  enum class Kind { kPrefixLength, kKnownPrefixes, kExplicit };

  Kind kind = Kind::kPrefixLength;
  std::size_t prefix_length = 1;
  std::vector<std::string> prefixes;          // longest match wins
  std::map<std::string, std::string> parent;  // leaf -> formation

  static FormationRule PrefixLength(std::size_t n);
  static FormationRule KnownPrefixes(std::vector<std::string> prefixes);
  static FormationRule Explicit(std::map<std::string, std::string> parent);
};

// Two-level class system. Leaf order defines the class index used by every
// probability table; formation order defines the router's class index.
class Taxonomy {
 public:
  // Leaves and formations are sorted lexicographically unless keep_order is
  // set, in which case leaf order is taken from the input.
  static Taxonomy Build(std::vector<std::string> leaf_codes, const FormationRule& rule,
                        bool keep_order = false);

  std::size_t num_leaves() const { return leaves_.size(); }
  std::size_t num_formations() const { return formations_.size(); }
  const std::vector<std::string>& leaves() const { return leaves_; }
  const std::vector<std::string>& formations() const { return formations_; }

  std::size_t formation_of(std::size_t leaf) const { return parent_[leaf]; }
  const std::vector<std::size_t>& leaves_of(std::size_t formation) const {
    return children_[formation];
  }
  std::optional<std::size_t> leaf_index(std::string_view code) const;
  std::optional<std::size_t> formation_index(std::string_view code) const;

  std::uint64_t Hash() const;

  nlohmann::json ToJson() const;
  static Taxonomy FromJson(const nlohmann::json& j);

  bool operator==(const Taxonomy& other) const {
    return leaves_ == other.leaves_ && formations_ == other.formations_ &&
           parent_ == other.parent_;
  }

 private:
  std::vector<std::string> formations_;
  std::vector<std::string> leaves_;
  std::vector<std::size_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::map<std::string, std::size_t, std::less<>> leaf_index_;
  std::map<std::string, std::size_t, std::less<>> formation_index_;
};

}  // namespace hdm
