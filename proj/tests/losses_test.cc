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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace hdm {
namespace {

using testing::CodeOf;

TEST(ClassWeights, InverseFrequency) {
  const std::vector<double> even = {10, 10};
  auto w = ComputeClassWeights(even, WeightScheme::kInverseFrequency).w;
  EXPECT_NEAR(w[0], 1.0, 1e-12);
  EXPECT_NEAR(w[1], 1.0, 1e-12);
  const std::vector<double> skew = {90, 10};
  w = ComputeClassWeights(skew, WeightScheme::kInverseFrequency).w;
  EXPECT_NEAR(w[0], 0.5556, 1e-3);
  EXPECT_NEAR(w[1], 5.0, 1e-3);
}

TEST(ClassWeights, EffectiveNumber) {
  const std::vector<double> counts = {1, 10};
  const auto w = ComputeClassWeights(counts, WeightScheme::kEffectiveNumber, 0.999).w;
  EXPECT_NEAR(w[0], 1.8174, 1e-3);
  EXPECT_NEAR(w[1], 0.1826, 1e-3);
  EXPECT_NEAR(w[0] + w[1], 2.0, 1e-12);
}

TEST(ClassWeights, ZeroCount) {
  const std::vector<double> counts = {0, 10};
  EXPECT_EQ(CodeOf([&] { ComputeClassWeights(counts, WeightScheme::kInverseFrequency); }),
            ErrorCode::kZeroCount);
}

TEST(LdamMargins, HandValues) {
  std::vector<double> c = {16, 1};
  auto m = LdamMargins(c, 0.5);
  EXPECT_NEAR(m[0], 0.25, 1e-12);
  EXPECT_NEAR(m[1], 0.5, 1e-12);
  c = {81, 16, 1};
  m = LdamMargins(c, 0.5);
  EXPECT_NEAR(m[0], 0.1667, 1e-4);
  EXPECT_NEAR(m[1], 0.25, 1e-4);
  EXPECT_NEAR(m[2], 0.5, 1e-4);
  c = {7, 7, 7};
  for (double v : LdamMargins(c, 0.3)) EXPECT_DOUBLE_EQ(v, 0.3);
}

LossSpec Spec(LossKind k, double gamma = 2.0, double margin = 0.5,
              std::optional<WeightScheme> w = std::nullopt) {
  LossSpec s;
  s.kind = k;
  s.gamma = gamma;
  s.max_margin = margin;
  s.weights = w;
  return s;
}

TEST(Losses, CrossEntropyUniformLogits) {
  const std::vector<double> logits = {0, 0, 0}, counts = {1, 1, 1};
  const auto r = LossAndGrad(logits, 0, Spec(LossKind::kCE), counts);
  EXPECT_NEAR(r.loss, std::log(3.0), 1e-12);
  EXPECT_NEAR(r.grad[0], -2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.grad[1], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.grad[2], 1.0 / 3.0, 1e-12);
}

TEST(Losses, FocalTwoClassUniform) {
  const std::vector<double> logits = {0, 0}, counts = {1, 1};
  const auto r = LossAndGrad(logits, 1, Spec(LossKind::kFL, 2.0), counts);
  EXPECT_NEAR(r.loss, 0.25 * std::log(2.0), 1e-12);
}

TEST(Losses, NonFiniteLogits) {
  const std::vector<double> logits = {0, NAN}, counts = {1, 1};
  EXPECT_EQ(CodeOf([&] { LossAndGrad(logits, 0, Spec(LossKind::kCE), counts); }),
            ErrorCode::kNonFiniteLogits);
}

TEST(Losses, WeightedKindsNeedScheme) {
  EXPECT_EQ(CodeOf([] { Spec(LossKind::kWCE).Validate(); }), ErrorCode::kInvalidConfig);
  EXPECT_NO_THROW(Spec(LossKind::kWCE, 2, 0.5, WeightScheme::kInverseFrequency).Validate());
}

struct Case {
  std::vector<double> logits, counts;
  std::size_t target;
};

Case RandomCase(Rng& rng) {
  Case c;
  const std::size_t K = 2 + rng.Index(6);
  for (std::size_t k = 0; k < K; ++k) {
    c.logits.push_back(rng.Normal() * 3.0);
    c.counts.push_back(static_cast<double>(1 + rng.Index(200)));
  }
  c.target = rng.Index(K);
  return c;
}

double MaxRelError(const Case& c, const LossSpec& spec) {
  const auto r = LossAndGrad(c.logits, c.target, spec, c.counts);
  double worst = 0.0;
  for (std::size_t k = 0; k < c.logits.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(c.logits[k]));
    auto up = c.logits, down = c.logits;
    up[k] += h;
    down[k] -= h;
    const double fd = (LossAndGrad(up, c.target, spec, c.counts).loss -
                       LossAndGrad(down, c.target, spec, c.counts).loss) /
                      (2.0 * h);
    const double err = std::abs(fd - r.grad[k]) / std::max(1e-3, std::abs(fd) + std::abs(r.grad[k]));
    worst = std::max(worst, err);
  }
  return worst;
}

class GradientCheck : public ::testing::TestWithParam<LossSpec> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  Rng rng(MixSeed(42, LossKindName(GetParam().kind)));
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) worst = std::max(worst, MaxRelError(RandomCase(rng), GetParam()));
  EXPECT_LE(worst, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(
    AllKinds, GradientCheck,
    ::testing::Values(Spec(LossKind::kCE), Spec(LossKind::kWCE, 2, 0.5, WeightScheme::kInverseFrequency),
                      Spec(LossKind::kFL, 2.0), Spec(LossKind::kFL, 0.5),
                      Spec(LossKind::kWFL, 1.5, 0.5, WeightScheme::kEffectiveNumber),
                      Spec(LossKind::kLDAM, 2, 0.5),
                      Spec(LossKind::kWLDAM, 2, 0.8, WeightScheme::kInverseFrequency)),
    [](const auto& info) { return std::string(LossKindName(info.param.kind)) + std::to_string(info.index); });

TEST(Losses, ReductionIdentities) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Case c = RandomCase(rng);
    const auto ce = LossAndGrad(c.logits, c.target, Spec(LossKind::kCE), c.counts);
    const auto fl0 = LossAndGrad(c.logits, c.target, Spec(LossKind::kFL, 0.0), c.counts);
    const auto ldam0 = LossAndGrad(c.logits, c.target, Spec(LossKind::kLDAM, 2, 1e-9), c.counts);
    EXPECT_NEAR(fl0.loss, ce.loss, 1e-12);
    EXPECT_NEAR(ldam0.loss, ce.loss, 1e-6);
    for (std::size_t k = 0; k < c.logits.size(); ++k) {
      EXPECT_NEAR(fl0.grad[k], ce.grad[k], 1e-12);
      EXPECT_NEAR(ldam0.grad[k], ce.grad[k], 1e-6);
    }
    // Uniform counts make every weight 1.
    const std::vector<double> flat(c.counts.size(), 5.0);
    const auto ce_flat = LossAndGrad(c.logits, c.target, Spec(LossKind::kCE), flat);
    const auto wce = LossAndGrad(c.logits, c.target,
                                 Spec(LossKind::kWCE, 2, 0.5, WeightScheme::kInverseFrequency), flat);
    EXPECT_NEAR(wce.loss, ce_flat.loss, 1e-12);
    const auto wfl0 = LossAndGrad(c.logits, c.target,
                                  Spec(LossKind::kWFL, 0.0, 0.5, WeightScheme::kEffectiveNumber), c.counts);
    const auto wce_eff = LossAndGrad(c.logits, c.target,
                                     Spec(LossKind::kWCE, 2, 0.5, WeightScheme::kEffectiveNumber), c.counts);
    EXPECT_NEAR(wfl0.loss, wce_eff.loss, 1e-12);
  }
}

TEST(Losses, NonNegativeAndVanishingAtCertainty) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const Case c = RandomCase(rng);
    for (LossKind k : {LossKind::kCE, LossKind::kFL, LossKind::kLDAM}) {
      EXPECT_GE(LossAndGrad(c.logits, c.target, Spec(k), c.counts).loss, 0.0);
    }
  }
  const std::vector<double> sure = {40, 0, 0}, counts = {3, 3, 3};
  for (LossKind k : {LossKind::kCE, LossKind::kFL}) {
    EXPECT_LT(LossAndGrad(sure, 0, Spec(k), counts).loss, 1e-15);
  }
  const auto wce = LossAndGrad(sure, 0, Spec(LossKind::kWCE, 2, 0.5, WeightScheme::kInverseFrequency), counts);
  EXPECT_LT(wce.loss, 1e-15);
}

TEST(Losses, SpecJsonRoundTrip) {
  const auto s = Spec(LossKind::kWLDAM, 1.0, 0.3, WeightScheme::kEffectiveNumber);
  const auto back = LossSpec::FromJson(s.ToJson());
  EXPECT_EQ(back.ToJson(), s.ToJson());
  EXPECT_EQ(ParseLossKind("wLDAM"), LossKind::kWLDAM);
  EXPECT_EQ(CodeOf([] { ParseLossKind("hinge"); }), ErrorCode::kInvalidConfig);
}

}  // namespace
}  // namespace hdm
