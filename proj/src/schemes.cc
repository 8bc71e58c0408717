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

#include "hdm/schemes.h"

#include <algorithm>
#include <cctype>

namespace hdm {

using nlohmann::json;

std::string_view SchemeName(SchemeKind k) {
  switch (k) {
    case SchemeKind::kMhdm: return "mhdm";
    case SchemeKind::kHhdm: return "hhdm";
    case SchemeKind::kBiogeo: return "biogeo";
  }
  return "?";
}

SchemeKind ParseScheme(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "mhdm") return SchemeKind::kMhdm;
  if (s == "hhdm") return SchemeKind::kHhdm;
  if (s == "biogeo" || s == "biogeo-hdm" || s == "biogeo_hdm") return SchemeKind::kBiogeo;
  Fail(ErrorCode::kInvalidConfig, "unknown scheme '" + std::string(name) + "'");
}

namespace {

struct MaskedInput {
  Matrix X;
  FeatureSchema schema;
};

MaskedInput SelectFeatures(const SampleTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const std::string& name : names) {
    std::size_t i = 0;
    while (i < table.schema.columns.size() && table.schema.columns[i].name != name) ++i;
    if (i == table.schema.columns.size()) {
      Fail(ErrorCode::kSchemaMismatch, "input lacks feature column '" + name + "'");
    }
    cols.push_back(i);
  }
  return {table.features.SelectCols(cols), table.schema.Select(cols)};
}

// Too few rows for the class count: fall back to training frequencies.
FittedModel FitOrFrequencies(const LearnerConfig& config, const Matrix& X,
                             const FeatureSchema& schema, const std::vector<int>& y,
                             std::vector<std::string> classes) {
  try {
    return Fit(config, X, schema, y, classes);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
  }
  std::vector<double> freq(classes.size(), 0.0);
  for (int t : y) freq[static_cast<std::size_t>(t)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(y.size());
  FittedModel m = FitConstant(std::move(classes), std::move(freq), schema);
  m.config = config;
  return m;
}

// Largest count; ties go to the lexicographically smallest leaf code.
std::size_t MajorityLeaf(const std::vector<std::size_t>& counts, const Taxonomy& taxonomy) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best] ||
        (counts[c] == counts[best] && taxonomy.leaves()[c] < taxonomy.leaves()[best])) {
      best = c;
    }
  }
  return best;
}

ProbabilityTable Uniform(std::vector<std::string> classes, std::size_t rows) {
  ProbabilityTable t(std::move(classes), rows);
  const double v = 1.0 / static_cast<double>(t.cols());
  std::fill(t.p.data().begin(), t.p.data().end(), v);
  std::fill(t.flagged_rows.begin(), t.flagged_rows.end(), true);
  return t;
}

std::vector<std::string> LeafCodes(const Taxonomy& taxonomy, std::size_t f) {
  std::vector<std::string> out;
  for (std::size_t leaf : taxonomy.leaves_of(f)) out.push_back(taxonomy.leaves()[leaf]);
  return out;
}

}  // namespace

StrategyModel TrainStrategy(SchemeKind kind, const SampleTable& table, const Taxonomy& taxonomy,
                            const ModalityMask& mask, const LearnerConfig& config,
                            std::uint64_t seed) {
  if (mask.empty()) Fail(ErrorCode::kEmptyMask, "modality mask is empty");
  StrategyModel m;
  m.kind = kind;
  m.taxonomy = taxonomy;
  m.mask = mask;
  m.bioregion_levels = table.bioregion_levels;
  const auto cols = table.schema.ColumnsFor(mask);
  if (cols.empty() && kind != SchemeKind::kBiogeo) {
    Fail(ErrorCode::kEmptyMask, "no feature columns for modalities " + mask.ToString());
  }
  for (std::size_t c : cols) m.feature_names.push_back(table.schema.columns[c].name);

  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.leaf[r] != kNoLabel) rows.push_back(r);
  }
  if (rows.empty()) Fail(ErrorCode::kNoTrainingRows, "no labelled training rows");

  LearnerConfig cfg = config;
  cfg.seed = seed;
  const std::size_t F = taxonomy.num_formations();

  if (kind == SchemeKind::kBiogeo) {
    std::map<std::pair<std::size_t, std::string>, std::vector<std::size_t>> groups;
    std::vector<std::vector<std::size_t>> per_formation(F, std::vector<std::size_t>(taxonomy.num_leaves(), 0));
    std::vector<std::size_t> overall(taxonomy.num_leaves(), 0);
    for (std::size_t r : rows) {
      const auto leaf = static_cast<std::size_t>(table.leaf[r]);
      const std::size_t f = taxonomy.formation_of(leaf);
      auto& g = groups[{f, table.bioregion[r]}];
      if (g.empty()) g.assign(taxonomy.num_leaves(), 0);
      ++g[leaf];
      ++per_formation[f][leaf];
      ++overall[leaf];
    }
    for (const auto& [key, counts] : groups) m.majority[key] = MajorityLeaf(counts, taxonomy);
    m.formation_majority.assign(F, kNoLabel);
    for (std::size_t f = 0; f < F; ++f) {
      const auto& c = per_formation[f];
      if (std::any_of(c.begin(), c.end(), [](std::size_t v) { return v > 0; })) {
        m.formation_majority[f] = static_cast<int>(MajorityLeaf(c, taxonomy));
      }
    }
    m.global_majority = MajorityLeaf(overall, taxonomy);
    return m;
  }

  const MaskedInput in = SelectFeatures(table.Subset(rows), m.feature_names);
  if (kind == SchemeKind::kMhdm) {
    std::vector<int> y;
    for (std::size_t r : rows) y.push_back(table.leaf[r]);
    m.global = FitOrFrequencies(cfg, in.X, in.schema, y, taxonomy.leaves());
    return m;
  }

  std::vector<int> yf;
  for (std::size_t r : rows) {
    yf.push_back(static_cast<int>(taxonomy.formation_of(static_cast<std::size_t>(table.leaf[r]))));
  }
  m.router = FitOrFrequencies(cfg, in.X, in.schema, yf, taxonomy.formations());
  m.by_formation.resize(F);
  m.formation_degenerate.assign(F, false);
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<std::size_t> local_rows;
    std::vector<int> y;
    const auto& leaves = taxonomy.leaves_of(f);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<std::size_t>(yf[i]) != f) continue;
      local_rows.push_back(i);
      const auto leaf = static_cast<std::size_t>(table.leaf[rows[i]]);
      y.push_back(static_cast<int>(std::find(leaves.begin(), leaves.end(), leaf) - leaves.begin()));
    }
    if (local_rows.empty()) {
      m.formation_degenerate[f] = true;
      continue;
    }
    if (leaves.size() == 1) {
      FittedModel c = FitConstant(LeafCodes(taxonomy, f), {1.0}, in.schema);
      c.config = cfg;
      m.by_formation[f] = std::move(c);
      m.formation_degenerate[f] = true;
      continue;
    }
    m.by_formation[f] =
        FitOrFrequencies(cfg, in.X.SelectRows(local_rows), in.schema, y, LeafCodes(taxonomy, f));
    m.formation_degenerate[f] = m.by_formation[f]->is_constant();
  }
  return m;
}

std::vector<ProbabilityTable> PredictConditional(const StrategyModel& model,
                                                 const SampleTable& table, int threads) {
  if (model.kind != SchemeKind::kHhdm) {
    Fail(ErrorCode::kKindMismatch, "conditional tables need an hhdm model");
  }
  const MaskedInput in = SelectFeatures(table, model.feature_names);
  std::vector<ProbabilityTable> out;
  for (std::size_t f = 0; f < model.taxonomy.num_formations(); ++f) {
    if (model.by_formation[f]) {
      out.push_back(model.by_formation[f]->PredictProba(in.X, in.schema, threads));
    } else {
      out.push_back(Uniform(LeafCodes(model.taxonomy, f), table.rows()));
    }
  }
  return out;
}

ProbabilityTable PredictJoint(const StrategyModel& model, const SampleTable& table, int threads) {
  const Taxonomy& tax = model.taxonomy;
  const std::size_t n = table.rows();
  if (model.kind == SchemeKind::kBiogeo) {
    ProbabilityTable t(tax.leaves(), n);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t leaf = model.global_majority;
      bool fallback = true;
      const int f = table.formation[r];
      if (f != kNoLabel) {
        auto it = model.majority.find({static_cast<std::size_t>(f), table.bioregion[r]});
        if (it != model.majority.end()) {
          leaf = it->second;
          fallback = false;
        } else if (model.formation_majority[static_cast<std::size_t>(f)] != kNoLabel) {
          leaf = static_cast<std::size_t>(model.formation_majority[static_cast<std::size_t>(f)]);
        }
      }
      t.p(r, leaf) = 1.0;
      t.flagged_rows[r] = fallback;
    }
    return t;
  }
  const MaskedInput in = SelectFeatures(table, model.feature_names);
  if (model.kind == SchemeKind::kMhdm) return model.global->PredictProba(in.X, in.schema, threads);

  const ProbabilityTable route = model.router->PredictProba(in.X, in.schema, threads);
  ProbabilityTable t(tax.leaves(), n);
  for (std::size_t f = 0; f < tax.num_formations(); ++f) {
    const auto& leaves = tax.leaves_of(f);
    if (!model.by_formation[f]) {
      for (std::size_t leaf : leaves) t.unseen_classes[leaf] = true;
      continue;
    }
    const FittedModel& fm = *model.by_formation[f];
    const Matrix cond = fm.PredictMatrix(in.X, threads);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      t.unseen_classes[leaves[i]] = !fm.seen[i] || !model.router->seen[f];
      for (std::size_t r = 0; r < n; ++r) t.p(r, leaves[i]) = route.p(r, f) * cond(r, i);
    }
  }
  return t;
}

ProbabilityTable NestedView(const ProbabilityTable& joint, const Taxonomy& taxonomy,
                            std::string_view formation) {
  const auto f = taxonomy.formation_index(formation);
  if (!f) Fail(ErrorCode::kUnknownFormation, "unknown formation '" + std::string(formation) + "'");
  if (joint.cols() != taxonomy.num_leaves()) {
    Fail(ErrorCode::kShapeMismatch, "joint table does not cover the taxonomy leaves");
  }
  const auto& leaves = taxonomy.leaves_of(*f);
  ProbabilityTable out(LeafCodes(taxonomy, *f), joint.rows());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    out.unseen_classes[i] = joint.unseen_classes[leaves[i]];
  }
  const double uniform = 1.0 / static_cast<double>(leaves.size());
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    double mass = 0.0;
    for (std::size_t leaf : leaves) mass += joint.p(r, leaf);
    if (mass > 0.0) {
      for (std::size_t i = 0; i < leaves.size(); ++i) out.p(r, i) = joint.p(r, leaves[i]) / mass;
      out.flagged_rows[r] = joint.flagged_rows[r];
    } else {
      for (std::size_t i = 0; i < leaves.size(); ++i) out.p(r, i) = uniform;
      out.flagged_rows[r] = true;
    }
  }
  return out;
}

json StrategyModel::ToJson() const {
  json j;
  j["format"] = "hdm-strategy-1";
  j["kind"] = SchemeName(kind);
  j["taxonomy"] = taxonomy.ToJson();
  j["taxonomy_hash"] = taxonomy.Hash();
  j["mask"] = mask.ToString();
  j["feature_names"] = feature_names;
  j["bioregion_levels"] = bioregion_levels;
  if (global) j["global"] = global->ToJson();
  if (router) j["router"] = router->ToJson();
  if (kind == SchemeKind::kHhdm) {
    json fm = json::array();
    for (const auto& m : by_formation) fm.push_back(m ? m->ToJson() : json(nullptr));
    j["by_formation"] = std::move(fm);
    std::vector<int> flags(formation_degenerate.begin(), formation_degenerate.end());
    j["formation_degenerate"] = flags;
  }
  if (kind == SchemeKind::kBiogeo) {
    json maj = json::array();
    for (const auto& [key, leaf] : majority) {
      maj.push_back({{"formation", taxonomy.formations()[key.first]},
                     {"bioregion", key.second},
                     {"leaf", taxonomy.leaves()[leaf]}});
    }
    j["majority"] = std::move(maj);
    j["formation_majority"] = formation_majority;
    j["global_majority"] = global_majority;
  }
  return j;
}

StrategyModel StrategyModel::FromJson(const json& j) {
  StrategyModel m;
  try {
    if (j.value("format", std::string()) != "hdm-strategy-1") {
      Fail(ErrorCode::kSchemaError, "not a strategy file");
    }
    m.kind = ParseScheme(j.at("kind").get<std::string>());
    m.taxonomy = Taxonomy::FromJson(j.at("taxonomy"));
    if (j.at("taxonomy_hash").get<std::uint64_t>() != m.taxonomy.Hash()) {
      Fail(ErrorCode::kSchemaError, "taxonomy hash mismatch");
    }
    m.mask = ModalityMask::Parse(j.at("mask").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.bioregion_levels = j.at("bioregion_levels").get<std::vector<std::string>>();
    if (j.contains("global")) m.global = FittedModel::FromJson(j.at("global"));
    if (j.contains("router")) m.router = FittedModel::FromJson(j.at("router"));
    if (j.contains("by_formation")) {
      for (const json& fm : j.at("by_formation")) {
        m.by_formation.push_back(fm.is_null() ? std::nullopt
                                              : std::optional<FittedModel>(FittedModel::FromJson(fm)));
      }
      for (int flag : j.at("formation_degenerate").get<std::vector<int>>()) {
        m.formation_degenerate.push_back(flag != 0);
      }
    }
    if (j.contains("majority")) {
      for (const json& e : j.at("majority")) {
        const auto f = m.taxonomy.formation_index(e.at("formation").get<std::string>());
        const auto leaf = m.taxonomy.leaf_index(e.at("leaf").get<std::string>());
        if (!f || !leaf) Fail(ErrorCode::kSchemaError, "majority entry outside the taxonomy");
        m.majority[{*f, e.at("bioregion").get<std::string>()}] = *leaf;
      }
      m.formation_majority = j.at("formation_majority").get<std::vector<int>>();
      m.global_majority = j.at("global_majority").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaError, std::string("strategy file: ") + e.what());
  }
  const bool complete = (m.kind == SchemeKind::kMhdm && m.global) ||
                        (m.kind == SchemeKind::kHhdm && m.router &&
                         m.by_formation.size() == m.taxonomy.num_formations()) ||
                        (m.kind == SchemeKind::kBiogeo &&
                         m.formation_majority.size() == m.taxonomy.num_formations());
  if (!complete) Fail(ErrorCode::kSchemaError, "strategy file is missing member models");
  return m;
}

}  // namespace hdm
