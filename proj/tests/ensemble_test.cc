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

#include "hdm/ensemble.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace hdm {
namespace {

using testing::CodeOf;

ProbabilityTable Table(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> cls;
  for (std::size_t c = 0; c < rows[0].size(); ++c) cls.push_back("c" + std::to_string(c));
  ProbabilityTable t(cls, rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.p(r, c) = rows[r][c];
  }
  return t;
}

ProbabilityTable RandomTable(Rng& rng, std::size_t n, std::size_t k) {
  ProbabilityTable t(std::vector<std::string>(k, "x"), n);
  for (std::size_t c = 0; c < k; ++c) t.classes[c] = "c" + std::to_string(c);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += t.p(r, c) = rng.Uniform() + 1e-3;
    for (std::size_t c = 0; c < k; ++c) t.p(r, c) /= s;
  }
  return t;
}

TEST(Combine, SingleMemberIsIdentity) {
  Rng rng(1);
  const std::vector<ProbabilityTable> one = {RandomTable(rng, 50, 4)};
  const std::vector<double> w = {1.0};
  EXPECT_EQ(Combine(one, w).p.data(), one[0].p.data());
}

TEST(Combine, HandExample) {
  const std::vector<ProbabilityTable> m = {Table({{1, 0}}), Table({{0, 1}})};
  const std::vector<double> w = {0.6, 0.4};
  const auto out = Combine(m, w);
  EXPECT_NEAR(out.p(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(out.p(0, 1), 0.4, 1e-15);
}

TEST(Combine, EqualMembersReturnTheMember) {
  Rng rng(2);
  const auto t = RandomTable(rng, 30, 5);
  const std::vector<ProbabilityTable> m = {t, t, t};
  const auto w = WeightsFromScores(std::vector<double>{0.2, 0.5, 0.3});
  const auto out = Combine(m, w);
  for (std::size_t i = 0; i < t.p.data().size(); ++i) EXPECT_NEAR(out.p.data()[i], t.p.data()[i], 1e-15);
}

TEST(Combine, ConvexAndNormalized) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = 1 + rng.Index(5), K = 2 + rng.Index(6);
    std::vector<ProbabilityTable> m;
    std::vector<double> scores;
    for (std::size_t i = 0; i < M; ++i) {
      m.push_back(RandomTable(rng, 40, K));
      scores.push_back(rng.Uniform());
    }
    const auto w = WeightsFromScores(scores);
    for (int threads : {1, 3}) {
      const auto out = Combine(m, w, threads);
      EXPECT_LE(out.MaxRowSumError(), 1e-9);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < K; ++c) {
          double lo = 1.0, hi = 0.0;
          for (const auto& t : m) {
            lo = std::min(lo, t.p(r, c));
            hi = std::max(hi, t.p(r, c));
          }
          EXPECT_GE(out.p(r, c), lo - 1e-15);
          EXPECT_LE(out.p(r, c), hi + 1e-15);
        }
      }
    }
  }
}

TEST(Combine, Errors) {
  const std::vector<ProbabilityTable> none;
  const std::vector<double> nw;
  EXPECT_EQ(CodeOf([&] { Combine(none, nw); }), ErrorCode::kEmptyEnsemble);
  const std::vector<ProbabilityTable> shapes = {Table({{1, 0}}), Table({{1, 0, 0}})};
  const std::vector<double> w2 = {0.5, 0.5};
  EXPECT_EQ(CodeOf([&] { Combine(shapes, w2); }), ErrorCode::kShapeMismatch);
  const std::vector<ProbabilityTable> rows = {Table({{1, 0}}), Table({{1, 0}, {0, 1}})};
  EXPECT_EQ(CodeOf([&] { Combine(rows, w2); }), ErrorCode::kShapeMismatch);
  auto renamed = Table({{1, 0}});
  renamed.classes = {"a", "b"};
  const std::vector<ProbabilityTable> names = {Table({{1, 0}}), renamed};
  EXPECT_EQ(CodeOf([&] { Combine(names, w2); }), ErrorCode::kShapeMismatch);
}

TEST(Weights, FloorAndScaleInvariance) {
  const auto w = WeightsFromScores(std::vector<double>{0.8, 0.2, 0.0}, 0.1);
  EXPECT_NEAR(w[0], 0.8 / 1.1, 1e-15);
  EXPECT_NEAR(w[1], 0.2 / 1.1, 1e-15);
  EXPECT_NEAR(w[2], 0.1 / 1.1, 1e-15);
  const std::vector<double> s = {0.31, 0.55, 0.12};
  std::vector<double> scaled;
  for (double v : s) scaled.push_back(v * 7.5);
  const auto a = WeightsFromScores(s, 0.0), b = WeightsFromScores(scaled, 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  EXPECT_EQ(CodeOf([] { WeightsFromScores(std::vector<double>{}); }), ErrorCode::kEmptyEnsemble);
  EXPECT_EQ(CodeOf([] { WeightsFromScores(std::vector<double>{1.0}, -1.0); }), ErrorCode::kInvalidConfig);
}

TEST(Uncertainty, EntropyAndDisagreement) {
  const std::vector<double> onehot = {0, 1, 0, 0}, flat = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(Entropy(onehot), 0.0);
  EXPECT_NEAR(Entropy(flat), 1.3863, 1e-4);
  EXPECT_NEAR(Entropy(flat), std::log(4.0), 1e-15);
  EXPECT_EQ(JensenShannon(flat, flat), 0.0);
  const std::vector<double> a = {1, 0}, b = {0, 1};
  EXPECT_NEAR(JensenShannon(a, b), std::log(2.0), 1e-15);

  Rng rng(4);
  const auto t = RandomTable(rng, 20, 4);
  const std::vector<ProbabilityTable> same = {t, t};
  const auto u = Uncertainty(t, same);
  for (const auto& row : u) {
    EXPECT_EQ(row.disagreement, 0.0);
    EXPECT_GE(row.entropy, 0.0);
    EXPECT_LE(row.entropy, std::log(4.0));
  }
  const std::vector<ProbabilityTable> m = {RandomTable(rng, 20, 4), RandomTable(rng, 20, 4), t};
  const auto c = Combine(m, WeightsFromScores(std::vector<double>{1, 1, 1}));
  for (const auto& row : Uncertainty(c, m)) {
    EXPECT_GT(row.disagreement, 0.0);
    EXPECT_LE(row.disagreement, std::log(2.0));
  }
  const std::vector<ProbabilityTable> single = {t};
  EXPECT_EQ(Uncertainty(t, single)[0].disagreement, 0.0);
}

TEST(Manifest, WeightsAndJsonRoundTrip) {
  EnsembleManifest e;
  e.floor = 0.05;
  e.members = {{"forest", "forest.json", 0.6, 0}, {"mlp", "mlp.json", 0.0, 0}};
  e.AssignWeights();
  EXPECT_NEAR(e.members[0].weight, 0.6 / 0.65, 1e-15);
  const auto back = EnsembleManifest::FromJson(nlohmann::json::parse(e.ToJson().dump()));
  EXPECT_EQ(back.ToJson(), e.ToJson());
  EXPECT_EQ(CodeOf([] { EnsembleManifest::FromJson({{"members", nlohmann::json::array()}}); }),
            ErrorCode::kEmptyEnsemble);
  EXPECT_EQ(CodeOf([] { EnsembleManifest::FromJson({{"weight_floor", 0.1}}); }), ErrorCode::kSchemaError);
}

}  // namespace
}  // namespace hdm
