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

#include "hdm/attribution.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace hdm {
namespace {

using testing::CodeOf;

Matrix RandomMatrix(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (double& v : m.data()) v = rng.Normal();
  return m;
}

ProbaFn Linear(std::vector<double> w) {
  return [w](const Matrix& X) {
    Matrix out(X.rows(), 1);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t i = 0; i < w.size(); ++i) out(r, 0) += w[i] * X(r, i);
    }
    return out;
  };
}

// Two-class softmax of a nonlinear score; feature 3 is ignored.
Matrix Nonlinear(const Matrix& X) {
  Matrix out(X.rows(), 2);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const double s = X(r, 0) * X(r, 1) + std::sin(X(r, 2)) + 0.5 * X(r, 0);
    out(r, 1) = 1.0 / (1.0 + std::exp(-s));
    out(r, 0) = 1.0 - out(r, 1);
  }
  return out;
}

TEST(Shapley, LinearModelClosedForm) {
  Rng rng(1);
  const std::vector<double> w = {2.0, -1.0, 0.5, 3.0};
  const Matrix bg = RandomMatrix(rng, 50, 4);
  ShapleyOptions opt;
  opt.permutations = 2000;
  opt.seed = 3;
  opt.target_class = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = RandomMatrix(rng, 1, 4);
    const auto res = SampledShapley(Linear(w), x.row(0), bg, opt);
    double wx = 0.0;
    for (std::size_t i = 0; i < 4; ++i) wx += w[i] * x(0, i);
    for (std::size_t i = 0; i < 4; ++i) {
      double mean = 0.0;
      for (std::size_t b = 0; b < bg.rows(); ++b) mean += bg(b, i);
      mean /= static_cast<double>(bg.rows());
      EXPECT_NEAR(res.phi[i], w[i] * (x(0, i) - mean), 0.02 * std::abs(wx));
    }
    EXPECT_EQ(res.permutations, 2000u);
    EXPECT_EQ(res.background_size, 50u);
  }
}

TEST(Shapley, ConstantModelGivesZero) {
  Rng rng(2);
  const Matrix bg = RandomMatrix(rng, 10, 3), x = RandomMatrix(rng, 1, 3);
  const ProbaFn constant = [](const Matrix& X) { return Matrix(X.rows(), 2, 0.5); };
  const auto res = SampledShapley(constant, x.row(0), bg, ShapleyOptions{});
  for (double v : res.phi) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(res.efficiency_gap, 0.0);
}

TEST(Shapley, DuplicatedFeaturesShareEqually) {
  Rng rng(4);
  Matrix bg(40, 2);
  for (std::size_t r = 0; r < bg.rows(); ++r) bg(r, 0) = bg(r, 1) = rng.Normal();
  const ProbaFn sym = [](const Matrix& X) {
    Matrix out(X.rows(), 1);
    for (std::size_t r = 0; r < X.rows(); ++r) out(r, 0) = std::tanh(X(r, 0) + X(r, 1));
    return out;
  };
  ShapleyOptions opt;
  opt.permutations = 4000;
  opt.target_class = 0;
  for (double v : {0.7, -1.5, 2.2}) {
    const std::vector<double> x = {v, v};
    const auto res = SampledShapley(sym, x, bg, opt);
    EXPECT_NEAR(res.phi[0], res.phi[1], 0.05 * std::abs(res.f_x - res.f_background) + 1e-3);
  }
}

TEST(Shapley, EfficiencyDummyAndDeterminism) {
  Rng rng(5);
  const Matrix bg = RandomMatrix(rng, 20, 4), X = RandomMatrix(rng, 100, 4);
  ShapleyOptions opt;
  opt.permutations = 60;
  opt.seed = 11;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < X.rows(); ++r) ids.push_back("p" + std::to_string(r));
  const auto res = AttributeRows(Nonlinear, X, ids, bg, opt, 1);
  double gap = 0.0, se = 0.0;
  const Matrix p = Nonlinear(X);
  for (std::size_t r = 0; r < res.size(); ++r) {
    gap += res[r].efficiency_gap;
    se += res[r].standard_error;
    EXPECT_EQ(res[r].phi[3], 0.0);
    EXPECT_EQ(res[r].target_class, p(r, 1) > p(r, 0) ? 1u : 0u);
  }
  EXPECT_LE(gap / 100.0, 3.0 * se / 100.0 + 1e-12);

  const auto again = AttributeRows(Nonlinear, X, ids, bg, opt, 3);
  for (std::size_t r = 0; r < res.size(); ++r) EXPECT_EQ(again[r].phi, res[r].phi);
  const auto single = SampledShapley(Nonlinear, X.row(7), bg, [&] {
    ShapleyOptions o = opt;
    o.seed = MixSeed(opt.seed, ids[7]);
    return o;
  }());
  EXPECT_EQ(single.phi, res[7].phi);
}

TEST(Shapley, EmptyBackground) {
  const std::vector<double> x = {1.0};
  EXPECT_EQ(CodeOf([&] { SampledShapley(Linear({1.0}), x, Matrix(0, 1), ShapleyOptions{}); }),
            ErrorCode::kEmptyBackground);
}

AttributionResult WithPhi(std::vector<double> phi) {
  AttributionResult r;
  r.phi = std::move(phi);
  return r;
}

TEST(ModalityShares, HandExamples) {
  const std::vector<Modality> tags = {Modality::kAbio, Modality::kRsbio};
  const std::vector<AttributionResult> one = {WithPhi({0.3, -0.1})};
  auto s = ModalityContribution(one, tags);
  ASSERT_TRUE(s.defined);
  EXPECT_NEAR(s.share.at(Modality::kAbio), 0.75, 1e-15);
  EXPECT_NEAR(s.share.at(Modality::kRsbio), 0.25, 1e-15);

  const std::vector<Modality> abio_only = {Modality::kAbio, Modality::kAbio};
  s = ModalityContribution(one, abio_only);
  EXPECT_EQ(s.share.at(Modality::kAbio), 1.0);

  const std::vector<AttributionResult> zero = {WithPhi({0.0, 0.0})};
  s = ModalityContribution(zero, tags);
  EXPECT_FALSE(s.defined);
  EXPECT_EQ(s.zero_samples, 1u);

  // Mean of per-sample shares, not a ratio of sums.
  const std::vector<AttributionResult> two = {WithPhi({0.3, 0.1}), WithPhi({0.0, 5.0}), WithPhi({0, 0})};
  s = ModalityContribution(two, tags);
  EXPECT_NEAR(s.share.at(Modality::kAbio), 0.375, 1e-15);
  EXPECT_EQ(s.samples, 2u);
  EXPECT_EQ(s.zero_samples, 1u);
  double total = 0.0;
  for (const auto& [m, v] : s.share) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
}

}  // namespace
}  // namespace hdm
