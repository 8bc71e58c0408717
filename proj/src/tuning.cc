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
#include <cmath>

#include "hdm/kernels.h"
#include "hdm/learners.h"
#include "hdm/metrics.h"

namespace hdm {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxEnumerated = 1u << 20;

std::string_view SectionOf(Family f) { return FamilyName(f); }

LearnerConfig Apply(const LearnerConfig& base, const std::vector<std::pair<std::string, json>>& values) {
  json j = base.ToJson();
  const std::string section(SectionOf(base.family));
  for (const auto& [name, value] : values) {
    if (j[section].contains(name)) {
      j[section][name] = value;
    } else if (j.contains(name) && name != "family" && name != "seed") {
      j[name] = value;
    } else {
      Fail(ErrorCode::kInvalidConfig, "unknown tunable parameter '" + name + "' for " + section);
    }
  }
  return LearnerConfig::FromJson(j);
}

json DrawValue(const SearchDimension& d, Rng& rng) {
  if (!d.is_range) return d.choices[rng.Index(d.choices.size())];
  if (d.integer) {
    const auto lo = static_cast<long long>(d.lo), hi = static_cast<long long>(d.hi);
    return lo + static_cast<long long>(rng.Index(static_cast<std::size_t>(hi - lo + 1)));
  }
  if (d.log_scale) return std::exp(rng.Uniform(std::log(d.lo), std::log(d.hi)));
  return rng.Uniform(d.lo, d.hi);
}

}  // namespace

json SearchSpace::ToJson() const {
  json params_json = json::object();
  for (const auto& [name, d] : params) {
    if (d.is_range) {
      json r = {{"min", d.lo}, {"max", d.hi}};
      if (d.integer) r = {{"min", static_cast<long long>(d.lo)}, {"max", static_cast<long long>(d.hi)}};
      if (d.log_scale) r["log"] = true;
      params_json[name] = r;
    } else {
      params_json[name] = d.choices;
    }
  }
  return {{"family", FamilyName(base.family)}, {"base", base.ToJson()}, {"params", params_json}};
}

SearchSpace SearchSpace::FromJson(const json& j) {
  SearchSpace s;
  try {
    json base = j.value("base", json::object());
    if (j.contains("family")) base["family"] = j.at("family");
    s.base = LearnerConfig::FromJson(base);
    const json params = j.value("params", json::object());
    for (const auto& [name, v] : params.items()) {
      SearchDimension d;
      if (v.is_array()) {
        d.choices.assign(v.begin(), v.end());
        if (d.choices.empty()) Fail(ErrorCode::kEmptySearchSpace, "'" + name + "' has no choices");
      } else if (v.is_object()) {
        d.is_range = true;
        d.integer = v.at("min").is_number_integer() && v.at("max").is_number_integer();
        d.lo = v.at("min").get<double>();
        d.hi = v.at("max").get<double>();
        d.log_scale = v.value("log", false);
        if (d.lo > d.hi) Fail(ErrorCode::kEmptySearchSpace, "'" + name + "' has min > max");
        if (d.log_scale && d.lo <= 0.0) {
          Fail(ErrorCode::kInvalidConfig, "'" + name + "' log range needs min > 0");
        }
      } else {
        d.choices = {v};
      }
      s.params[name] = std::move(d);
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, std::string("search space: ") + e.what());
  }
  return s;
}

SearchSpace SearchSpace::Default(Family family) {
  SearchSpace s;
  s.base.family = family;
  auto choices = [](std::vector<json> v) {
    SearchDimension d;
    d.choices = std::move(v);
    return d;
  };
  switch (family) {
    case Family::kForest:
      s.params["max_depth"] = choices({6, 10, 16});
      s.params["feature_fraction"] = choices({0.3, 0.5, 0.8});
      s.params["min_leaf"] = choices({1, 3});
      break;
    case Family::kBoosting:
      s.params["max_depth"] = choices({3, 4, 6});
      s.params["learning_rate"] = choices({0.05, 0.1, 0.2});
      s.params["n_rounds"] = choices({40, 80});
      break;
    case Family::kMlp:
      s.params["hidden"] = choices({json::array({32}), json::array({64}), json::array({64, 32})});
      s.params["learning_rate"] = choices({0.005, 0.01, 0.03});
      break;
  }
  return s;
}

std::size_t SearchSpace::FiniteSize() const {
  std::size_t n = 1;
  for (const auto& [name, d] : params) {
    if (d.is_range) return 0;
    n *= d.choices.size();
    if (n > kMaxEnumerated) return 0;
  }
  return n;
}

std::vector<LearnerConfig> SearchSpace::Sample(std::size_t budget, std::uint64_t seed) const {
  if (params.empty()) Fail(ErrorCode::kEmptySearchSpace, "no tunable parameters declared");
  if (budget < 1) Fail(ErrorCode::kInvalidConfig, "budget must be >= 1");
  for (const auto& [name, d] : params) {
    if (!d.is_range && d.choices.empty()) {
      Fail(ErrorCode::kEmptySearchSpace, "'" + name + "' has no choices");
    }
  }
  Rng rng(MixSeed(seed, "tune"));
  std::vector<LearnerConfig> out;
  const std::size_t finite = FiniteSize();
  if (finite > 0) {
    // Distinct grid points in random order.
    std::vector<std::size_t> cells(finite);
    for (std::size_t i = 0; i < finite; ++i) cells[i] = i;
    const std::size_t take = std::min(budget, finite);
    for (std::size_t i = 0; i < take; ++i) std::swap(cells[i], cells[i + rng.Index(finite - i)]);
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t code = cells[i];
      std::vector<std::pair<std::string, json>> values;
      for (const auto& [name, d] : params) {
        values.emplace_back(name, d.choices[code % d.choices.size()]);
        code /= d.choices.size();
      }
      out.push_back(Apply(base, values));
    }
    return out;
  }
  for (std::size_t i = 0; i < budget; ++i) {
    std::vector<std::pair<std::string, json>> values;
    for (const auto& [name, d] : params) values.emplace_back(name, DrawValue(d, rng));
    out.push_back(Apply(base, values));
  }
  return out;
}

TuneResult Tune(const SearchSpace& space, std::size_t budget, const Matrix& X_inner,
                std::span<const int> y_inner, const Matrix& X_holdout,
                std::span<const int> y_holdout, const FeatureSchema& schema,
                const std::vector<std::string>& classes, std::uint64_t seed) {
  TuneResult result;
  result.tried = space.Sample(budget, seed);
  for (const LearnerConfig& cfg : result.tried) {
    const FittedModel m = Fit(cfg, X_inner, schema, y_inner, classes);
    const Matrix p = m.PredictMatrix(X_holdout, cfg.threads);
    const double score = MacroF1(kernels::serial::RowArgmax(p), y_holdout, classes.size());
    result.scores.push_back(score);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i) {
    if (result.scores[i] > result.scores[best]) best = i;
  }
  result.best = result.tried[best];
  result.best_score = result.scores[best];
  return result;
}

}  // namespace hdm
