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

#include "hdm/schemes.h"

#include <gtest/gtest.h>

#include <map>

#include "test_util.h"

namespace hdm {
namespace {

using testing::CodeOf;

LearnerConfig SmallForest() {
  LearnerConfig c;
  c.family = Family::kForest;
  c.forest.n_trees = 10;
  c.threads = 1;
  return c;
}

const ModalityMask kAbioRsbio{Modality::kAbio, Modality::kRsbio};

Matrix Masked(const StrategyModel& m, const SampleTable& t) {
  std::vector<std::size_t> cols;
  for (const auto& name : m.feature_names) {
    for (std::size_t c = 0; c < t.schema.columns.size(); ++c) {
      if (t.schema.columns[c].name == name) cols.push_back(c);
    }
  }
  return t.features.SelectCols(cols);
}

TEST(Biogeo, MajorityAndTieBreak) {
  const auto tax = Taxonomy::Build({"T11", "T12", "U1"}, FormationRule::PrefixLength(1));
  const auto schema = testing::Schema({{"abio__x", Modality::kAbio}});
  const std::vector<std::string> labels = {"T11", "T12", "T11", "T11", "T12", "T12", "T11", "T11", "U1"};
  const std::vector<std::string> regions = {"alpine", "alpine", "alpine", "alpine",
                                            "boreal", "boreal", "boreal", "boreal", "alpine"};
  const auto table = testing::MakeTable(tax, labels, {}, {}, Matrix(labels.size(), 1), schema, regions);
  const auto m = TrainStrategy(SchemeKind::kBiogeo, table, tax, ModalityMask{Modality::kAbio},
                               SmallForest(), 1);
  const std::size_t T = *tax.formation_index("T");
  EXPECT_EQ(tax.leaves()[m.majority.at({T, "alpine"})], "T11");
  // 2 vs 2 in boreal.
  EXPECT_EQ(tax.leaves()[m.majority.at({T, "boreal"})], "T11");

  const auto joint = PredictJoint(m, table);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto key = std::make_pair(static_cast<std::size_t>(table.formation[r]), table.bioregion[r]);
    EXPECT_EQ(static_cast<std::size_t>(joint.Argmax()[r]), m.majority.at(key));
    EXPECT_FALSE(joint.flagged_rows[r]);
  }
}

TEST(Biogeo, UnseenPairFallsBackToFormationMajority) {
  const auto tax = Taxonomy::Build({"T11", "T12", "U1"}, FormationRule::PrefixLength(1));
  const auto schema = testing::Schema({{"abio__x", Modality::kAbio}});
  const auto train = testing::MakeTable(tax, {"T12", "T12", "T11", "U1"}, {}, {}, Matrix(4, 1), schema,
                                        {"alpine", "alpine", "boreal", "alpine"});
  const auto m = TrainStrategy(SchemeKind::kBiogeo, train, tax, ModalityMask{Modality::kAbio}, SmallForest(), 1);
  const auto probe = testing::MakeTable(tax, {"T11", "U1"}, {}, {}, Matrix(2, 1), schema, {"steppe", "steppe"});
  const auto joint = PredictJoint(m, probe);
  EXPECT_EQ(joint.Argmax()[0], static_cast<int>(*tax.leaf_index("T12")));
  EXPECT_EQ(joint.Argmax()[1], static_cast<int>(*tax.leaf_index("U1")));
  EXPECT_TRUE(joint.flagged_rows[0]);
}

TEST(Biogeo, MatchesGroupByOracle) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    auto spec = testing::SmallSpec(seed);
    spec.decay_ratio = 0.8;
    spec.n_bioregions = 4;
    const auto [table, tax] = GenerateSynthetic(spec);
    const auto m = TrainStrategy(SchemeKind::kBiogeo, table, tax, kAbioRsbio, SmallForest(), 1);
    std::map<std::pair<std::size_t, std::string>, std::map<std::string, int>> counts;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const auto leaf = static_cast<std::size_t>(table.leaf[r]);
      ++counts[{tax.formation_of(leaf), table.bioregion[r]}][tax.leaves()[leaf]];
    }
    ASSERT_EQ(counts.size(), m.majority.size());
    for (const auto& [key, per_leaf] : counts) {
      // std::map iterates codes in order, so strict > keeps the smallest on ties.
      std::string best;
      int best_n = -1;
      for (const auto& [code, n] : per_leaf) {
        if (n > best_n) {
          best = code;
          best_n = n;
        }
      }
      EXPECT_EQ(tax.leaves()[m.majority.at(key)], best);
    }
  }
}

TEST(Hhdm, StructureOnThreeFormations) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  const auto m = TrainStrategy(SchemeKind::kHhdm, table, tax, kAbioRsbio, SmallForest(), 7);
  ASSERT_TRUE(m.router);
  EXPECT_EQ(m.router->classes, tax.formations());
  ASSERT_EQ(m.by_formation.size(), 3u);
  std::vector<std::string> all;
  for (std::size_t f = 0; f < 3; ++f) {
    ASSERT_TRUE(m.by_formation[f]);
    for (const auto& c : m.by_formation[f]->classes) {
      EXPECT_EQ(tax.formations()[tax.formation_of(*tax.leaf_index(c))], tax.formations()[f]);
      all.push_back(c);
    }
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, tax.leaves());

  const auto cond = PredictConditional(m, table, 1);
  for (const auto& t : cond) EXPECT_LE(t.MaxRowSumError(), 1e-9);
  const auto joint = PredictJoint(m, table, 1);
  EXPECT_LE(joint.MaxRowSumError(), 1e-9);

  // Summing the joint within a formation gives back the router.
  const Matrix route = m.router->PredictMatrix(Masked(m, table), 1);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t f = 0; f < 3; ++f) {
      double s = 0.0;
      for (std::size_t leaf : tax.leaves_of(f)) s += joint.p(r, leaf);
      EXPECT_NEAR(s, route(r, f), 1e-12);
    }
  }

  // The nested view of the joint cancels the router factor.
  for (std::size_t f = 0; f < 3; ++f) {
    const auto nested = NestedView(joint, tax, tax.formations()[f]);
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (nested.flagged_rows[r]) continue;
      for (std::size_t c = 0; c < nested.cols(); ++c) EXPECT_NEAR(nested.p(r, c), cond[f].p(r, c), 1e-12);
    }
  }
}

TEST(Hhdm, OneLeafFormationIsCertain) {
  const auto tax = Taxonomy::Build({"A1", "B1", "B2"}, FormationRule::PrefixLength(1));
  const auto schema = testing::Schema({{"abio__x", Modality::kAbio}});
  Matrix X(30, 1);
  std::vector<std::string> labels;
  for (std::size_t r = 0; r < 30; ++r) {
    labels.push_back(tax.leaves()[r % 3]);
    X(r, 0) = static_cast<double>(r % 3) + 0.01 * static_cast<double>(r);
  }
  const auto table = testing::MakeTable(tax, labels, {}, {}, X, schema);
  const auto m = TrainStrategy(SchemeKind::kHhdm, table, tax, ModalityMask{Modality::kAbio}, SmallForest(), 2);
  EXPECT_TRUE(m.formation_degenerate[0]);
  const auto cond = PredictConditional(m, table, 1);
  for (std::size_t r = 0; r < table.rows(); ++r) EXPECT_EQ(cond[0].p(r, 0), 1.0);
}

TEST(Hhdm, RouterTimesConditional) {
  const auto tax = Taxonomy::Build({"A1", "B1", "B2"}, FormationRule::PrefixLength(1));
  const auto schema = testing::Schema({{"abio__x", Modality::kAbio}});
  StrategyModel m;
  m.kind = SchemeKind::kHhdm;
  m.taxonomy = tax;
  m.mask = ModalityMask{Modality::kAbio};
  m.feature_names = {"abio__x"};
  m.router = FitConstant({"A", "B"}, {0.5, 0.5}, schema);
  m.by_formation = {FitConstant({"A1"}, {1.0}, schema), FitConstant({"B1", "B2"}, {0.2, 0.8}, schema)};
  m.formation_degenerate = {true, true};
  const auto table = testing::MakeTable(tax, {"A1"}, {}, {}, Matrix(1, 1), schema);
  const auto joint = PredictJoint(m, table);
  EXPECT_NEAR(joint.p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(joint.p(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(joint.p(0, 2), 0.4, 1e-15);

  const auto nested = NestedView(joint, tax, "B");
  EXPECT_EQ(nested.classes, (std::vector<std::string>{"B1", "B2"}));
  EXPECT_NEAR(nested.p(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(nested.p(0, 1), 0.8, 1e-15);
  EXPECT_EQ(CodeOf([&] { NestedView(joint, tax, "Z"); }), ErrorCode::kUnknownFormation);
  EXPECT_EQ(CodeOf([&] { PredictConditional(StrategyModel{}, table); }), ErrorCode::kKindMismatch);
}

TEST(NestedView, IdempotentAndZeroMass) {
  const auto tax = Taxonomy::Build({"A1", "B1", "B2"}, FormationRule::PrefixLength(1));
  ProbabilityTable joint(tax.leaves(), 2);
  joint.p(0, 1) = 0.3;
  joint.p(0, 2) = 0.7;
  joint.p(1, 0) = 1.0;
  const auto b = NestedView(joint, tax, "B");
  EXPECT_EQ(b.p(0, 0), 0.3);
  EXPECT_EQ(b.p(0, 1), 0.7);
  EXPECT_FALSE(b.flagged_rows[0]);
  EXPECT_EQ(b.p(1, 0), 0.5);
  EXPECT_EQ(b.p(1, 1), 0.5);
  EXPECT_TRUE(b.flagged_rows[1]);
}

TEST(Hhdm, SingleFormationMatchesMhdm) {
  auto spec = testing::SmallSpec(21);
  spec.n_formations = 1;
  spec.leaves_per_formation = {4};
  const auto [table, tax] = GenerateSynthetic(spec);
  ASSERT_EQ(tax.num_formations(), 1u);
  for (Family fam : {Family::kForest, Family::kBoosting}) {
    LearnerConfig cfg = SmallForest();
    cfg.family = fam;
    cfg.boosting.n_rounds = 10;
    const auto h = TrainStrategy(SchemeKind::kHhdm, table, tax, kAbioRsbio, cfg, 9);
    const auto g = TrainStrategy(SchemeKind::kMhdm, table, tax, kAbioRsbio, cfg, 9);
    const auto cond = PredictConditional(h, table, 1)[0];
    const auto flat = PredictJoint(g, table, 1);
    const auto joint = PredictJoint(h, table, 1);
    ASSERT_EQ(cond.p.data().size(), flat.p.data().size());
    for (std::size_t i = 0; i < flat.p.data().size(); ++i) {
      EXPECT_EQ(cond.p.data()[i], flat.p.data()[i]);
      EXPECT_NEAR(joint.p.data()[i], flat.p.data()[i], 1e-12);
    }
  }
}

TEST(Strategy, JsonRoundTrip) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  for (SchemeKind k : {SchemeKind::kMhdm, SchemeKind::kHhdm, SchemeKind::kBiogeo}) {
    const auto m = TrainStrategy(k, table, tax, kAbioRsbio, SmallForest(), 5);
    const auto back = StrategyModel::FromJson(nlohmann::json::parse(m.ToJson().dump()));
    EXPECT_EQ(back.ToJson(), m.ToJson());
    const auto a = PredictJoint(m, table, 1), b = PredictJoint(back, table, 1);
    EXPECT_EQ(a.p.data(), b.p.data());
  }
  auto bad = TrainStrategy(SchemeKind::kMhdm, table, tax, kAbioRsbio, SmallForest(), 5).ToJson();
  bad["taxonomy_hash"] = 1;
  EXPECT_EQ(CodeOf([&] { StrategyModel::FromJson(bad); }), ErrorCode::kSchemaError);
}

TEST(Strategy, Errors) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  EXPECT_EQ(CodeOf([&] { TrainStrategy(SchemeKind::kMhdm, table, tax, ModalityMask{}, SmallForest(), 1); }),
            ErrorCode::kEmptyMask);
  // No SAR columns in the synthetic table.
  EXPECT_EQ(CodeOf([&] {
              TrainStrategy(SchemeKind::kMhdm, table, tax, ModalityMask{Modality::kSar}, SmallForest(), 1);
            }),
            ErrorCode::kEmptyMask);
  auto unlabelled = table;
  std::fill(unlabelled.leaf.begin(), unlabelled.leaf.end(), kNoLabel);
  EXPECT_EQ(CodeOf([&] { TrainStrategy(SchemeKind::kHhdm, unlabelled, tax, kAbioRsbio, SmallForest(), 1); }),
            ErrorCode::kNoTrainingRows);
  EXPECT_EQ(ParseScheme("HHDM"), SchemeKind::kHhdm);
  EXPECT_EQ(CodeOf([] { ParseScheme("flat"); }), ErrorCode::kInvalidConfig);
}

}  // namespace
}  // namespace hdm
