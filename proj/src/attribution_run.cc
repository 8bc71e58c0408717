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

#include <algorithm>
#include <numeric>
#include <sstream>

#include "hdm/experiment.h"

namespace hdm {

using nlohmann::json;

namespace {

std::vector<std::size_t> SampleRows(std::vector<std::size_t> rows, std::size_t n,
                                    std::uint64_t seed) {
  Rng rng(seed);
  rng.Shuffle(rows);
  if (rows.size() > n) rows.resize(n);
  std::sort(rows.begin(), rows.end());
  return rows;
}

json SharesJson(const ModalityShares& s) {
  json share = json::object();
  for (const auto& [m, v] : s.share) share[std::string(ModalityLabel(m))] = v;
  return {{"defined", s.defined},
          {"samples", s.samples},
          {"zero_samples", s.zero_samples},
          {"share", share}};
}

}  // namespace

AttributionReport RunAttribution(const ExperimentConfig& config, const ExperimentData& data) {
  const SampleTable& table = data.table;
  const Taxonomy& tax = data.taxonomy;
  const ModalityMask mask =
      config.masks.empty() ? table.schema.PresentModalities() : config.masks.front();
  LearnerConfig learner = config.learners.empty() ? SearchSpace::Default(Family::kForest).base
                                                  : config.learners.front().space.base;
  learner.threads = config.threads;

  const StrategyModel model =
      TrainStrategy(SchemeKind::kHhdm, table, tax, mask, learner, MixSeed(config.seed, "attribution"));
  const auto cols = table.schema.ColumnsFor(mask);
  const Matrix X = table.features.SelectCols(cols);
  std::vector<Modality> tags;
  for (std::size_t c : cols) tags.push_back(table.schema.columns[c].modality);

  AttributionReport rep;
  rep.strategy = StrategyName(SchemeKind::kHhdm, mask);
  std::vector<AttributionResult> all;
  for (std::size_t f = 0; f < tax.num_formations(); ++f) {
    FormationAttribution fa;
    fa.formation = tax.formations()[f];
    const auto& slot = model.by_formation[f];
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.formation[r] == static_cast<int>(f)) rows.push_back(r);
    }
    // A constant model has nothing to attribute.
    if (!slot || slot->is_constant() || rows.empty()) {
      rep.formations.push_back(std::move(fa));
      continue;
    }
    const std::string tag = "/" + fa.formation;
    const auto explained = SampleRows(rows, config.attribution.samples_per_formation,
                                      MixSeed(config.seed, "attribution-rows" + tag));
    const auto background = SampleRows(rows, config.attribution.background,
                                       MixSeed(config.seed, "attribution-background" + tag));
    std::vector<std::string> ids;
    for (std::size_t r : explained) ids.push_back(table.row_ids[r]);
    const FittedModel& fm = *slot;
    const ProbaFn predict = [&fm](const Matrix& batch) { return fm.PredictMatrix(batch, 1); };
    ShapleyOptions opts;
    opts.permutations = config.attribution.permutations;
    opts.seed = MixSeed(config.seed, "shapley" + tag);
    const auto results = AttributeRows(predict, X.SelectRows(explained), ids,
                                       X.SelectRows(background), opts,
                                       config.threads > 0 ? config.threads : DefaultThreads());
    fa.shares = ModalityContribution(results, tags);
    for (const auto& r : results) {
      fa.mean_efficiency_gap += r.efficiency_gap;
      fa.mean_standard_error += r.standard_error;
    }
    fa.mean_efficiency_gap /= static_cast<double>(results.size());
    fa.mean_standard_error /= static_cast<double>(results.size());
    all.insert(all.end(), results.begin(), results.end());
    rep.formations.push_back(std::move(fa));
  }
  rep.overall = ModalityContribution(all, tags);
  return rep;
}

json AttributionReport::ToJson() const {
  json forms = json::array();
  for (const auto& f : formations) {
    json j = SharesJson(f.shares);
    j["formation"] = f.formation;
    j["mean_efficiency_gap"] = f.mean_efficiency_gap;
    j["mean_standard_error"] = f.mean_standard_error;
    forms.push_back(std::move(j));
  }
  return {{"strategy", strategy}, {"formations", forms}, {"overall", SharesJson(overall)}};
}

std::string AttributionReport::Csv() const {
  std::ostringstream out;
  out << "formation,modality,share,samples,zero_samples\n";
  auto emit = [&out](const std::string& name, const ModalityShares& s) {
    for (const auto& [m, v] : s.share) {
      out << CsvEscape(name) << ',' << ModalityLabel(m) << ',' << FormatDouble(v) << ','
          << s.samples << ',' << s.zero_samples << '\n';
    }
  };
  for (const auto& f : formations) emit(f.formation, f.shares);
  emit("ALL", overall);
  return out.str();
}

}  // namespace hdm
