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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hdm {

enum class WeightScheme { kUniform, kInverseFrequency, kEffectiveNumber };

std::string_view WeightSchemeName(WeightScheme s);
WeightScheme ParseWeightScheme(std::string_view name);

// Per-class weights. Inverse frequency gives a per-sample mean of 1; the
// effective number is rescaled to sum to the number of classes.
struct ClassWeights {
  WeightScheme scheme = WeightScheme::kUniform;
  std::vector<double> w;
};

// inverse_frequency: w_c = N / (K n_c).
// effective_number:  w_c proportional to (1 - beta) / (1 - beta^n_c).
// Throws kZeroCount when any count is 0.
ClassWeights ComputeClassWeights(std::span<const double> counts, WeightScheme scheme,
                                 double beta = 0.999);

// Margins proportional to n_c^{-1/4}, rescaled so the largest is max_margin.
std::vector<double> LdamMargins(std::span<const double> counts, double max_margin = 0.5);

enum class LossKind { kCE, kWCE, kFL, kWFL, kLDAM, kWLDAM };

std::string_view LossKindName(LossKind k);
LossKind ParseLossKind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::kCE;
  double gamma = 2.0;
  double max_margin = 0.5;
  // Required for the weighted kinds, ignored otherwise.
  std::optional<WeightScheme> weights;
  double beta = 0.999;

  bool weighted() const {
    return kind == LossKind::kWCE || kind == LossKind::kWFL || kind == LossKind::kWLDAM;
  }
  bool focal() const { return kind == LossKind::kFL || kind == LossKind::kWFL; }
  bool margin() const { return kind == LossKind::kLDAM || kind == LossKind::kWLDAM; }

  void Validate() const;
  // {"loss":"wLDAM","gamma":2.0,"max_margin":0.5,"weights":"effective_number","beta":0.999}
  nlohmann::json ToJson() const;
  static LossSpec FromJson(const nlohmann::json& j);
};

// Class weights and margins resolved against training counts, so the
// per-sample evaluation does no allocation.
class PreparedLoss {
 public:
  // Zero counts are treated as 1: such classes never occur as targets.
  PreparedLoss(const LossSpec& spec, std::span<const double> counts);

  std::size_t num_classes() const { return weight_.size(); }
  const LossSpec& spec() const { return spec_; }
  const std::vector<double>& weights() const { return weight_; }
  const std::vector<double>& margins() const { return margin_; }

  // Returns the loss; writes d loss / d logits into grad (may be empty to
  // skip it). `scratch` must have num_classes() entries.
  double Evaluate(std::span<const double> logits, std::size_t target, std::span<double> grad,
                  std::span<double> scratch) const;

 private:
  LossSpec spec_;
  std::vector<double> weight_;
  std::vector<double> margin_;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Throws kNonFiniteLogits, kZeroCount, kInvalidConfig.
LossResult LossAndGrad(std::span<const double> logits, std::size_t target, const LossSpec& spec,
                       std::span<const double> counts);

}  // namespace hdm
