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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdm/dataset.h"
#include "hdm/learners.h"
#include "hdm/probability.h"
#include "hdm/taxonomy.h"

namespace hdm {

enum class SchemeKind { kMhdm, kHhdm, kBiogeo };

std::string_view SchemeName(SchemeKind k);  // "mhdm", "hhdm", "biogeo"
SchemeKind ParseScheme(std::string_view name);

// A trained classification strategy.
//  mhdm:   one model over every leaf.
//  hhdm:   one model per formation over its leaves, plus a formation router.
//  biogeo: majority leaf per (formation, bioregion).
struct StrategyModel {
  SchemeKind kind = SchemeKind::kMhdm;
  Taxonomy taxonomy;
  ModalityMask mask;
  std::vector<std::string> feature_names;  // masked input columns, in order
  std::vector<std::string> bioregion_levels;

  std::optional<FittedModel> global;

  std::optional<FittedModel> router;
  std::vector<std::optional<FittedModel>> by_formation;  // empty slot: no training rows
  // Formation models replaced by a constant (one leaf, one class present, or too few rows).
  std::vector<bool> formation_degenerate;

  std::map<std::pair<std::size_t, std::string>, std::size_t> majority;
  std::vector<int> formation_majority;  // kNoLabel when the formation was never seen
  std::size_t global_majority = 0;

  nlohmann::json ToJson() const;
  static StrategyModel FromJson(const nlohmann::json& j);
};

// Trains on every row of `table` (pass a subset for a fold). The learner seed
// is replaced by `seed`. Throws kEmptyMask, kNoTrainingRows.
StrategyModel TrainStrategy(SchemeKind kind, const SampleTable& table, const Taxonomy& taxonomy,
                            const ModalityMask& mask, const LearnerConfig& config,
                            std::uint64_t seed);

// Per-formation tables over that formation's leaves (hhdm only, else
// kKindMismatch). Formations without a model give uniform, flagged rows.
std::vector<ProbabilityTable> PredictConditional(const StrategyModel& model,
                                                 const SampleTable& table, int threads = 0);

// Table over all leaves in taxonomy order. biogeo reads the formation and
// bioregion columns of `table`; the others read its features.
ProbabilityTable PredictJoint(const StrategyModel& model, const SampleTable& table,
                              int threads = 0);

// Restricts a joint table to one formation's leaves and renormalizes rows.
// Rows without mass in the formation become uniform and are flagged.
ProbabilityTable NestedView(const ProbabilityTable& joint, const Taxonomy& taxonomy,
                            std::string_view formation);

}  // namespace hdm
