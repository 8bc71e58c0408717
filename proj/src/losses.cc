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

#include "hdm/losses.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hdm/common.h"

namespace hdm {

std::string_view WeightSchemeName(WeightScheme s) {
  switch (s) {
    case WeightScheme::kUniform: return "uniform";
    case WeightScheme::kInverseFrequency: return "inverse_frequency";
    case WeightScheme::kEffectiveNumber: return "effective_number";
  }
  return "uniform";
}

WeightScheme ParseWeightScheme(std::string_view name) {
  if (name == "uniform" || name == "none") return WeightScheme::kUniform;
  if (name == "inverse_frequency" || name == "weighted") return WeightScheme::kInverseFrequency;
  if (name == "effective_number" || name == "balanced") return WeightScheme::kEffectiveNumber;
  Fail(ErrorCode::kInvalidConfig, "unknown weight scheme '" + std::string(name) + "'");
}

ClassWeights ComputeClassWeights(std::span<const double> counts, WeightScheme scheme,
                                 double beta) {
  if (counts.empty()) Fail(ErrorCode::kInvalidConfig, "no classes");
  for (double c : counts) {
    if (!(c >= 1.0)) Fail(ErrorCode::kZeroCount, "class counts must be >= 1");
  }
  if (scheme == WeightScheme::kEffectiveNumber && !(beta > 0.0 && beta < 1.0)) {
    Fail(ErrorCode::kInvalidConfig, "beta must be in (0, 1)");
  }
  const double K = static_cast<double>(counts.size());
  double N = 0.0;
  for (double c : counts) N += c;
  ClassWeights out;
  out.scheme = scheme;
  out.w.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    switch (scheme) {
      case WeightScheme::kUniform: out.w[i] = 1.0; break;
      case WeightScheme::kInverseFrequency: out.w[i] = N / (K * counts[i]); break;
      case WeightScheme::kEffectiveNumber:
        out.w[i] = (1.0 - beta) / -std::expm1(counts[i] * std::log(beta));
        break;
    }
  }
  // N / (K n_c) already averages 1 per sample; the effective number is
  // rescaled to sum K.
  if (scheme == WeightScheme::kEffectiveNumber) {
    double sum = 0.0;
    for (double w : out.w) sum += w;
    for (double& w : out.w) w *= K / sum;
  }
  return out;
}

std::vector<double> LdamMargins(std::span<const double> counts, double max_margin) {
  if (!(max_margin > 0.0)) Fail(ErrorCode::kInvalidConfig, "max_margin must be > 0");
  std::vector<double> m(counts.size());
  double top = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] >= 1.0)) Fail(ErrorCode::kZeroCount, "class counts must be >= 1");
    m[i] = std::pow(counts[i], -0.25);
    top = std::max(top, m[i]);
  }
  for (double& v : m) v = max_margin * v / top;
  return m;
}

std::string_view LossKindName(LossKind k) {
  switch (k) {
    case LossKind::kCE: return "CE";
    case LossKind::kWCE: return "WCE";
    case LossKind::kFL: return "FL";
    case LossKind::kWFL: return "wFL";
    case LossKind::kLDAM: return "LDAM";
    case LossKind::kWLDAM: return "wLDAM";
  }
  return "CE";
}

LossKind ParseLossKind(std::string_view name) {
  std::string n(name);
  for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "ce") return LossKind::kCE;
  if (n == "wce") return LossKind::kWCE;
  if (n == "fl") return LossKind::kFL;
  if (n == "wfl") return LossKind::kWFL;
  if (n == "ldam") return LossKind::kLDAM;
  if (n == "wldam") return LossKind::kWLDAM;
  Fail(ErrorCode::kInvalidConfig, "unknown loss '" + std::string(name) + "'");
}

void LossSpec::Validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) Fail(ErrorCode::kInvalidConfig, "gamma must be >= 0");
  if (!(max_margin > 0.0)) Fail(ErrorCode::kInvalidConfig, "max_margin must be > 0");
  if (weighted() && !weights) {
    Fail(ErrorCode::kInvalidConfig, std::string(LossKindName(kind)) + " requires class weights");
  }
  if (!(beta > 0.0 && beta < 1.0)) Fail(ErrorCode::kInvalidConfig, "beta must be in (0, 1)");
}

nlohmann::json LossSpec::ToJson() const {
  nlohmann::json j = {{"loss", std::string(LossKindName(kind))},
                      {"gamma", gamma},
                      {"max_margin", max_margin},
                      {"beta", beta}};
  j["weights"] = weights ? nlohmann::json(std::string(WeightSchemeName(*weights))) : nlohmann::json();
  return j;
}

LossSpec LossSpec::FromJson(const nlohmann::json& j) {
  LossSpec s;
  try {
    s.kind = ParseLossKind(j.value("loss", std::string("CE")));
    s.gamma = j.value("gamma", s.gamma);
    s.max_margin = j.value("max_margin", s.max_margin);
    s.beta = j.value("beta", s.beta);
    if (j.contains("weights") && !j.at("weights").is_null()) {
      s.weights = ParseWeightScheme(j.at("weights").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, std::string("loss spec: ") + e.what());
  }
  s.Validate();
  return s;
}

PreparedLoss::PreparedLoss(const LossSpec& spec, std::span<const double> counts) : spec_(spec) {
  spec_.Validate();
  std::vector<double> c(counts.begin(), counts.end());
  for (double& v : c) v = std::max(v, 1.0);
  if (spec_.weighted()) {
    weight_ = ComputeClassWeights(c, *spec_.weights, spec_.beta).w;
  } else {
    weight_.assign(c.size(), 1.0);
  }
  if (spec_.margin()) {
    margin_ = LdamMargins(c, spec_.max_margin);
  } else {
    margin_.assign(c.size(), 0.0);
  }
}

double PreparedLoss::Evaluate(std::span<const double> logits, std::size_t target,
                              std::span<double> grad, std::span<double> scratch) const {
  const std::size_t K = logits.size();
  // scratch holds the (margin-shifted) logits, then the softmax.
  double top = -INFINITY;
  for (std::size_t j = 0; j < K; ++j) {
    scratch[j] = logits[j] - (j == target ? margin_[j] : 0.0);
    top = std::max(top, scratch[j]);
  }
  double z = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    scratch[j] = std::exp(scratch[j] - top);
    z += scratch[j];
  }
  const double log_z = std::log(z);
  const double log_p = std::log(scratch[target]) - log_z;
  double rest = 0.0;  // 1 - p_y without cancellation
  for (std::size_t j = 0; j < K; ++j) {
    scratch[j] /= z;
    if (j != target) rest += scratch[j];
  }
  const double p = scratch[target];
  const double w = weight_[target];

  double loss;
  double coef;  // grad_j = coef * (p_j - [j == y])
  if (spec_.focal() && spec_.gamma > 0.0) {
    const double g = spec_.gamma;
    const double mod = std::pow(rest, g);
    loss = -w * mod * log_p;
    const double dmod = rest > 0.0 ? g * std::pow(rest, g - 1.0) * p * log_p : 0.0;
    coef = w * (mod - dmod);
  } else {
    loss = -w * log_p;
    coef = w;
  }
  if (!grad.empty()) {
    for (std::size_t j = 0; j < K; ++j) grad[j] = coef * (scratch[j] - (j == target ? 1.0 : 0.0));
  }
  return loss;
}

LossResult LossAndGrad(std::span<const double> logits, std::size_t target, const LossSpec& spec,
                       std::span<const double> counts) {
  for (double v : logits) {
    if (!std::isfinite(v)) Fail(ErrorCode::kNonFiniteLogits, "logits must be finite");
  }
  if (logits.size() != counts.size()) {
    Fail(ErrorCode::kShapeMismatch, "logits and counts differ in length");
  }
  if (target >= logits.size()) Fail(ErrorCode::kInvalidConfig, "target index out of range");
  for (double c : counts) {
    if (!(c >= 1.0)) Fail(ErrorCode::kZeroCount, "class counts must be >= 1");
  }
  PreparedLoss prepared(spec, counts);
  LossResult r;
  r.grad.resize(logits.size());
  std::vector<double> scratch(logits.size());
  r.loss = prepared.Evaluate(logits, target, r.grad, scratch);
  return r;
}

}  // namespace hdm
