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

#include "hdm/taxonomy.h"

#include <algorithm>
#include <set>

#include "hdm/common.h"

namespace hdm {

FormationRule FormationRule::PrefixLength(std::size_t n) {
  FormationRule r;
  r.kind = Kind::kPrefixLength;
  r.prefix_length = n;
  return r;
}

FormationRule FormationRule::KnownPrefixes(std::vector<std::string> prefixes) {
  FormationRule r;
  r.kind = Kind::kKnownPrefixes;
  r.prefixes = std::move(prefixes);
  return r;
}

FormationRule FormationRule::Explicit(std::map<std::string, std::string> parent) {
  FormationRule r;
  r.kind = Kind::kExplicit;
  r.parent = std::move(parent);
  return r;
}

namespace {

std::optional<std::string> FormationFor(const std::string& leaf, const FormationRule& rule) {
  switch (rule.kind) {
    case FormationRule::Kind::kPrefixLength:
      if (rule.prefix_length == 0 || leaf.size() < rule.prefix_length) return std::nullopt;
      return leaf.substr(0, rule.prefix_length);
    case FormationRule::Kind::kKnownPrefixes: {
      std::optional<std::string> best;
      for (const auto& p : rule.prefixes) {
        if (!p.empty() && leaf.starts_with(p) && (!best || p.size() > best->size())) best = p;
      }
      return best;
    }
    case FormationRule::Kind::kExplicit: {
      auto it = rule.parent.find(leaf);
      if (it == rule.parent.end() || it->second.empty()) return std::nullopt;
      return it->second;
    }
  }
  return std::nullopt;
}

}  // namespace

Taxonomy Taxonomy::Build(std::vector<std::string> leaf_codes, const FormationRule& rule,
                         bool keep_order) {
  if (leaf_codes.empty()) Fail(ErrorCode::kEmptyTaxonomy, "no leaf codes");
  {
    std::set<std::string> seen;
    for (const auto& c : leaf_codes) {
      if (c.empty()) Fail(ErrorCode::kUnmappableLeaf, "empty leaf code");
      if (!seen.insert(c).second) Fail(ErrorCode::kDuplicateCode, "leaf '" + c + "'");
    }
  }
  if (leaf_codes.size() < 2) Fail(ErrorCode::kEmptyTaxonomy, "at least 2 leaves are required");
  if (!keep_order) std::sort(leaf_codes.begin(), leaf_codes.end());

  std::vector<std::string> parents;
  parents.reserve(leaf_codes.size());
  std::set<std::string> formation_set;
  for (const auto& leaf : leaf_codes) {
    auto f = FormationFor(leaf, rule);
    if (!f) Fail(ErrorCode::kUnmappableLeaf, "no formation for leaf '" + leaf + "'");
    parents.push_back(*f);
    formation_set.insert(*f);
  }
  Taxonomy t;
  t.formations_.assign(formation_set.begin(), formation_set.end());
  for (std::size_t i = 0; i < t.formations_.size(); ++i) t.formation_index_[t.formations_[i]] = i;
  t.leaves_ = std::move(leaf_codes);
  t.children_.resize(t.formations_.size());
  for (std::size_t i = 0; i < t.leaves_.size(); ++i) {
    t.leaf_index_[t.leaves_[i]] = i;
    const std::size_t f = t.formation_index_.at(parents[i]);
    t.parent_.push_back(f);
    t.children_[f].push_back(i);
  }
  return t;
}

std::optional<std::size_t> Taxonomy::leaf_index(std::string_view code) const {
  auto it = leaf_index_.find(code);
  if (it == leaf_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Taxonomy::formation_index(std::string_view code) const {
  auto it = formation_index_.find(code);
  if (it == formation_index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Taxonomy::Hash() const {
  std::uint64_t h = Fnv1a("taxonomy");
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    h = Fnv1a(leaves_[i], h);
    h = Fnv1a("|", h);
    h = Fnv1a(formations_[parent_[i]], h);
    h = Fnv1a(";", h);
  }
  return h;
}

nlohmann::json Taxonomy::ToJson() const {
  nlohmann::json leaves = nlohmann::json::array();
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    leaves.push_back({{"code", leaves_[i]}, {"formation", formations_[parent_[i]]}});
  }
  return {{"formations", formations_}, {"leaves", leaves}};
}

Taxonomy Taxonomy::FromJson(const nlohmann::json& j) {
  std::vector<std::string> codes;
  std::map<std::string, std::string> parent;
  for (const auto& leaf : j.at("leaves")) {
    codes.push_back(leaf.at("code").get<std::string>());
    parent[codes.back()] = leaf.at("formation").get<std::string>();
  }
  return Build(std::move(codes), FormationRule::Explicit(std::move(parent)), true);
}

}  // namespace hdm
