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

#include "hdm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace hdm {

nlohmann::json SyntheticSpec::ToJson() const {
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : modalities) {
    mods.push_back({{"modality", std::string(ModalityName(m.modality))},
                    {"n_features", m.n_features},
                    {"signal", m.signal}});
  }
  return {{"n_formations", n_formations},
          {"leaves_per_formation", leaves_per_formation},
          {"modalities", mods},
          {"base_samples", base_samples},
          {"decay_ratio", decay_ratio},
          {"samples_per_leaf", samples_per_leaf},
          {"domain_size", domain_size},
          {"cluster_radius", cluster_radius},
          {"autocorrelation_length", autocorrelation_length},
          {"sites_per_leaf", sites_per_leaf},
          {"site_effect", site_effect},
          {"field_amplitude", field_amplitude},
          {"noise", noise},
          {"leaf_scale", leaf_scale},
          {"formation_scale", formation_scale},
          {"formation_fraction", formation_fraction},
          {"n_bioregions", n_bioregions},
          {"seed", seed}};
}

SyntheticSpec SyntheticSpec::FromJson(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    s.n_formations = j.value("n_formations", s.n_formations);
    if (j.contains("leaves_per_formation")) {
      const auto& l = j.at("leaves_per_formation");
      s.leaves_per_formation = l.is_array() ? l.get<std::vector<int>>() : std::vector<int>{l.get<int>()};
    }
    if (j.contains("modalities")) {
      s.modalities.clear();
      for (const auto& m : j.at("modalities")) {
        s.modalities.push_back({ParseModality(m.at("modality").get<std::string>()),
                                m.value("n_features", 4), m.value("signal", 1.0)});
      }
    }
    s.base_samples = j.value("base_samples", s.base_samples);
    s.decay_ratio = j.value("decay_ratio", s.decay_ratio);
    s.samples_per_leaf = j.value("samples_per_leaf", s.samples_per_leaf);
    s.domain_size = j.value("domain_size", s.domain_size);
    s.cluster_radius = j.value("cluster_radius", s.cluster_radius);
    s.autocorrelation_length = j.value("autocorrelation_length", s.autocorrelation_length);
    s.sites_per_leaf = j.value("sites_per_leaf", s.sites_per_leaf);
    s.site_effect = j.value("site_effect", s.site_effect);
    s.field_amplitude = j.value("field_amplitude", s.field_amplitude);
    s.noise = j.value("noise", s.noise);
    s.leaf_scale = j.value("leaf_scale", s.leaf_scale);
    s.formation_scale = j.value("formation_scale", s.formation_scale);
    s.formation_fraction = j.value("formation_fraction", s.formation_fraction);
    s.n_bioregions = j.value("n_bioregions", s.n_bioregions);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidSpec, e.what());
  }
  s.Validate();
  return s;
}

void SyntheticSpec::Validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kInvalidSpec, what); };
  if (n_formations < 1 || n_formations > 26) bad("n_formations must be in [1, 26]");
  if (leaves_per_formation.empty()) bad("leaves_per_formation is empty");
  if (leaves_per_formation.size() != 1 &&
      leaves_per_formation.size() != static_cast<std::size_t>(n_formations)) {
    bad("leaves_per_formation needs 1 or n_formations entries");
  }
  int total = 0;
  for (int l : leaves_per_formation) {
    if (l < 1 || l > 99) bad("leaves per formation must be in [1, 99]");
  }
  for (int f = 0; f < n_formations; ++f) {
    total += leaves_per_formation.size() == 1 ? leaves_per_formation[0] : leaves_per_formation[f];
  }
  if (total < 2) bad("at least 2 leaves are required");
  if (modalities.empty()) bad("no modalities");
  for (const auto& m : modalities) {
    if (m.n_features < 1) bad("n_features must be >= 1");
    if (!(m.signal >= 0.0)) bad("signal must be >= 0");
    if (m.modality == Modality::kBioreg) bad("bioreg columns are derived from the bioregion");
  }
  if (samples_per_leaf.empty()) {
    if (base_samples < 1) bad("base_samples must be >= 1");
    if (!(decay_ratio > 0.0 && decay_ratio <= 1.0)) bad("decay_ratio must be in (0, 1]");
  } else {
    if (samples_per_leaf.size() != static_cast<std::size_t>(total)) {
      bad("samples_per_leaf needs one entry per leaf");
    }
    for (int c : samples_per_leaf) {
      if (c < 1) bad("samples_per_leaf entries must be >= 1");
    }
  }
  if (!(domain_size > 0) || !(cluster_radius > 0) || !(autocorrelation_length > 0)) {
    bad("spatial lengths must be > 0");
  }
  if (sites_per_leaf < 1) bad("sites_per_leaf must be >= 1");
  if (!(noise >= 0) || !(site_effect >= 0) || !(field_amplitude >= 0) || !(leaf_scale >= 0) ||
      !(formation_scale >= 0)) {
    bad("scales must be >= 0");
  }
  if (!(formation_fraction > 0.0 && formation_fraction <= 1.0)) {
    bad("formation_fraction must be in (0, 1]");
  }
  if (n_bioregions < 1) bad("n_bioregions must be >= 1");
}

std::vector<int> SyntheticSpec::LeafCounts() const {
  int total = 0;
  for (int f = 0; f < n_formations; ++f) {
    total += leaves_per_formation.size() == 1 ? leaves_per_formation[0] : leaves_per_formation[f];
  }
  if (!samples_per_leaf.empty()) return samples_per_leaf;
  std::vector<int> counts(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const double c = static_cast<double>(base_samples) * std::pow(decay_ratio, i);
    counts[static_cast<std::size_t>(i)] = std::max(1, static_cast<int>(std::llround(c)));
  }
  return counts;
}

namespace {

struct FieldComponent {
  double wx, wy, phase;
};

std::string LeafCode(int formation, int leaf) {
  std::string code(1, static_cast<char>('A' + formation));
  if (leaf + 1 < 10) code += '0';
  code += std::to_string(leaf + 1);
  return code;
}

}  // namespace

std::pair<SampleTable, Taxonomy> GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);

  std::vector<std::string> codes;
  std::vector<int> leaf_formation;
  for (int f = 0; f < spec.n_formations; ++f) {
    const int nl = spec.leaves_per_formation.size() == 1 ? spec.leaves_per_formation[0]
                                                         : spec.leaves_per_formation[f];
    for (int l = 0; l < nl; ++l) {
      codes.push_back(LeafCode(f, l));
      leaf_formation.push_back(f);
    }
  }
  Taxonomy taxonomy = Taxonomy::Build(codes, FormationRule::PrefixLength(1));
  const std::size_t K = codes.size();
  const std::vector<int> counts = spec.LeafCounts();

  // Column layout and which columns carry formation signal.
  SampleTable t;
  std::vector<double> col_signal;
  std::vector<bool> col_formation;
  for (const auto& block : spec.modalities) {
    const int n_form = std::max(1, static_cast<int>(std::ceil(block.n_features * spec.formation_fraction)));
    for (int j = 0; j < block.n_features; ++j) {
      t.schema.columns.push_back(
          {std::string(ModalityName(block.modality)) + "__f" + std::to_string(j + 1), block.modality,
           false, false});
      col_signal.push_back(block.signal);
      col_formation.push_back(j < n_form);
    }
  }
  const std::size_t D = col_signal.size();

  const double form_sd = spec.formation_scale * spec.leaf_scale;
  std::vector<std::vector<double>> form_centre(static_cast<std::size_t>(spec.n_formations),
                                               std::vector<double>(D));
  for (auto& c : form_centre) {
    for (std::size_t j = 0; j < D; ++j) c[j] = col_formation[j] ? form_sd * rng.Normal() : 0.0;
  }
  std::vector<std::vector<double>> leaf_centre(K, std::vector<double>(D));
  for (auto& c : leaf_centre) {
    for (std::size_t j = 0; j < D; ++j) c[j] = spec.leaf_scale * rng.Normal();
  }

  constexpr int kFieldTerms = 6;
  std::vector<std::vector<FieldComponent>> field(D);
  for (auto& comps : field) {
    for (int k = 0; k < kFieldTerms; ++k) {
      const double wx = rng.Normal() / spec.autocorrelation_length;
      const double wy = rng.Normal() / spec.autocorrelation_length;
      comps.push_back({wx, wy, rng.Uniform(0.0, 2.0 * std::numbers::pi)});
    }
  }
  const double field_norm = spec.field_amplitude * std::sqrt(2.0 / kFieldTerms);

  std::size_t n_total = 0;
  for (int c : counts) n_total += static_cast<std::size_t>(c);
  t.features = Matrix(n_total, D);

  std::size_t row = 0;
  for (std::size_t leaf = 0; leaf < K; ++leaf) {
    // Taxonomy order is lexicographic and equals generation order here.
    const std::size_t form = static_cast<std::size_t>(leaf_formation[leaf]);
    std::vector<std::pair<double, double>> sites;
    std::vector<std::vector<double>> site_offset;
    for (int s = 0; s < spec.sites_per_leaf; ++s) {
      sites.emplace_back(rng.Uniform(0.0, spec.domain_size), rng.Uniform(0.0, spec.domain_size));
      std::vector<double> off(D);
      for (double& v : off) v = spec.site_effect * rng.Normal();
      site_offset.push_back(std::move(off));
    }
    for (int i = 0; i < counts[leaf]; ++i, ++row) {
      const std::size_t s = static_cast<std::size_t>(i % spec.sites_per_leaf);
      const double px = std::clamp(sites[s].first + spec.cluster_radius * rng.Normal(), 0.0,
                                   spec.domain_size);
      const double py = std::clamp(sites[s].second + spec.cluster_radius * rng.Normal(), 0.0,
                                   spec.domain_size);
      char id[32];
      std::snprintf(id, sizeof(id), "p%06zu", row + 1);
      t.row_ids.emplace_back(id);
      t.x.push_back(px);
      t.y.push_back(py);
      const int region = std::min(spec.n_bioregions - 1,
                                  static_cast<int>(px / spec.domain_size * spec.n_bioregions));
      t.bioregion.push_back("R" + std::to_string(region + 1));
      t.leaf.push_back(static_cast<int>(leaf));
      t.formation.push_back(static_cast<int>(form));
      for (std::size_t j = 0; j < D; ++j) {
        double f = 0.0;
        for (const auto& c : field[j]) f += std::cos(c.wx * px + c.wy * py + c.phase);
        const double structured =
            form_centre[form][j] + leaf_centre[leaf][j] + site_offset[s][j] + field_norm * f;
        t.features(row, j) = col_signal[j] * structured + spec.noise * rng.Normal();
      }
    }
  }

  std::vector<std::string> levels;
  for (int r = 0; r < spec.n_bioregions; ++r) levels.push_back("R" + std::to_string(r + 1));
  AppendBioregionOneHot(t, levels);
  return {std::move(t), std::move(taxonomy)};
}

}  // namespace hdm
