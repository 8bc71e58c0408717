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
#include <utility>
#include <vector>

#include "hdm/dataset.h"
#include "hdm/taxonomy.h"

namespace hdm {

// A group of feature columns of one modality. `signal` scales the class
// structure (formation and leaf centres, site offsets, spatial field) that
// the columns carry; 0 makes them pure noise.
struct ModalityBlock {
  Modality modality = Modality::kAbio;
  int n_features = 4;
  double signal = 1.0;
};

struct SyntheticSpec {
  int n_formations = 3;
  // One entry per formation, or a single entry applied to all.
  std::vector<int> leaves_per_formation = {4};
  std::vector<ModalityBlock> modalities = {{Modality::kAbio, 6, 1.0},
                                           {Modality::kRsbio, 4, 0.6},
                                           {Modality::kOther, 2, 0.0}};
  // Per-leaf counts are round(base * ratio^i) over the global leaf index,
  // floored at 1, unless explicit counts are given.
  int base_samples = 50;
  double decay_ratio = 1.0;
  std::vector<int> samples_per_leaf;

  double domain_size = 10000.0;        // metres, square domain
  double cluster_radius = 400.0;       // sd of samples around their site
  double autocorrelation_length = 2500.0;
  int sites_per_leaf = 6;
  double site_effect = 0.5;            // sd of per-site feature offsets
  double field_amplitude = 0.3;        // sd of the smooth spatial field
  double noise = 1.0;
  double leaf_scale = 1.0;             // sd of leaf centres
  double formation_scale = 2.0;        // formation centre sd / leaf_scale
  // Fraction of each informative modality's columns that carry formation signal.
  double formation_fraction = 0.5;
  int n_bioregions = 3;
  std::uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static SyntheticSpec FromJson(const nlohmann::json& j);
  void Validate() const;
  std::vector<int> LeafCounts() const;
};

// Formations are coded "A", "B", ...; leaves "A01", "A02", ... so that a
// prefix-length-1 rule recovers the hierarchy.
std::pair<SampleTable, Taxonomy> GenerateSynthetic(const SyntheticSpec& spec);

}  // namespace hdm
