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

#include "hdm/experiment.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "test_util.h"

namespace hdm {
namespace {

using nlohmann::json;
using testing::CodeOf;

json SmallConfigJson() {
  return {{"synthetic", testing::SmallSpec().ToJson()},
          {"schemes", {"mhdm", "hhdm", "biogeo"}},
          {"masks", {"AR"}},
          {"learners",
           {{{"name", "forest"},
             {"family", "forest"},
             {"budget", 1},
             {"base", {{"forest", {{"n_trees", 8}}}}},
             {"params", {{"max_depth", {8}}}}},
            {{"name", "boost"},
             {"family", "boosting"},
             {"budget", 1},
             {"params", {{"n_rounds", {8}}, {"max_depth", {3}}}}}}},
          {"n_folds", 4},
          {"seed", 5},
          {"top_k", {3, 5}}};
}

ExperimentConfig SmallConfig() { return ExperimentConfig::FromJson(SmallConfigJson()); }

TEST(Config, ParsesAndRoundTrips) {
  const auto c = SmallConfig();
  EXPECT_EQ(c.learners.size(), 2u);
  EXPECT_EQ(c.learners[0].budget, 1u);
  EXPECT_EQ(c.masks[0], (ModalityMask{Modality::kAbio, Modality::kRsbio}));
  EXPECT_EQ(ExperimentConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());

  auto bad = SmallConfigJson();
  bad["n_fold"] = 3;
  EXPECT_EQ(CodeOf([&] { ExperimentConfig::FromJson(bad); }), ErrorCode::kInvalidConfig);
  bad = SmallConfigJson();
  bad["fold_mode"] = "checkerboard";
  EXPECT_EQ(CodeOf([&] { ExperimentConfig::FromJson(bad); }), ErrorCode::kInvalidConfig);
  bad = SmallConfigJson();
  bad["n_folds"] = 1;
  EXPECT_EQ(CodeOf([&] { ExperimentConfig::FromJson(bad).Validate(); }), ErrorCode::kInvalidConfig);
  bad = SmallConfigJson();
  bad["dataset"] = "x.csv";
  EXPECT_EQ(CodeOf([&] { ExperimentConfig::FromJson(bad).Validate(); }), ErrorCode::kInvalidConfig);

  const auto defaults = ExperimentConfig::FromJson({{"synthetic", testing::SmallSpec().ToJson()}});
  EXPECT_EQ(defaults.n_folds, 4);
  EXPECT_EQ(defaults.learners.size(), 3u);
  EXPECT_EQ(StrategyName(SchemeKind::kHhdm, ModalityMask::Parse("AR")), "AR-HHDM");
  EXPECT_EQ(StrategyName(SchemeKind::kBiogeo, ModalityMask::Parse("A")), "BIOGEO");
}

class CvRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new ExperimentConfig(SmallConfig());
    data_ = new ExperimentData(LoadExperimentData(*config_));
    report_ = new CvReport(RunCv(*config_, *data_));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete data_;
    delete config_;
  }
  static ExperimentConfig* config_;
  static ExperimentData* data_;
  static CvReport* report_;
};

ExperimentConfig* CvRun::config_ = nullptr;
ExperimentData* CvRun::data_ = nullptr;
CvReport* CvRun::report_ = nullptr;

TEST_F(CvRun, FoldsAndAggregates) {
  const CvReport& r = *report_;
  EXPECT_EQ(r.folds.size(), 4u);
  ASSERT_EQ(r.strategies.size(), 3u);
  EXPECT_NE(r.Find("AR-MHDM"), nullptr);
  EXPECT_NE(r.Find("AR-HHDM"), nullptr);
  EXPECT_NE(r.Find("BIOGEO"), nullptr);
  std::size_t tested = 0;
  for (const auto& f : r.folds) tested += f.n_test;
  EXPECT_EQ(tested, data_->table.rows());
  for (const auto& s : r.strategies) {
    EXPECT_EQ(s.folds.size(), 4u);
    for (const char* key : {"top1", "top3", "top5", "coverage_error"}) {
      ASSERT_TRUE(s.aggregate.count(key)) << s.name << " " << key;
      EXPECT_TRUE(std::isfinite(s.aggregate.at(key).mean));
    }
    EXPECT_LE(s.aggregate.at("top1").mean, s.aggregate.at("top3").mean);
    EXPECT_LE(s.aggregate.at("top3").mean, s.aggregate.at("top5").mean);
    EXPECT_GE(s.aggregate.at("coverage_error").mean, 1.0);
    double mean = 0.0;
    for (const auto& f : s.folds) mean += f.ensemble.top1;
    EXPECT_NEAR(mean / 4.0, s.aggregate.at("top1").mean, 1e-12);
    if (s.scheme != SchemeKind::kBiogeo) {
      for (const auto& f : s.folds) {
        ASSERT_EQ(f.members.size(), 2u);
        EXPECT_NEAR(f.members[0].weight + f.members[1].weight, 1.0, 1e-12);
      }
    }
  }
  const json j = r.ToJson();
  EXPECT_EQ(j.at("format"), "hdm-cv-report-1");
  EXPECT_EQ(j.at("cv").at("leakage_violations"), 0);
}

TEST_F(CvRun, RerunIsByteIdentical) {
  auto cfg = *config_;
  cfg.threads = 2;
  EXPECT_EQ(RunCv(cfg, *data_).ToJson().dump(), report_->ToJson().dump());
}

TEST_F(CvRun, OutputsAreWritten) {
  testing::TempDir dir("cv_out");
  WriteCvOutputs(*report_, data_->taxonomy, dir.path().string());
  for (const char* f : {"report.json", "timing.json", "class_metrics.csv", "ranking_metrics.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.File(f))) << f;
  }
  const auto rows = ReadClassScores(dir.File("class_metrics.csv"));
  EXPECT_EQ(rows.size(), ClassScoreRows(*report_, data_->taxonomy).size());
}

TEST_F(CvRun, AblationReusesTheFullRun) {
  const auto ab = RunAblation(*config_, *data_, *report_);
  EXPECT_EQ(ab.strategy, "AR-MHDM");
  EXPECT_NEAR(ab.ce_full, report_->Find("AR-MHDM")->aggregate.at("coverage_error").mean, 1e-12);
  ASSERT_EQ(ab.rows.size(), 2u);
  for (const auto& row : ab.rows) {
    EXPECT_NEAR(row.delta_percent, AblationDeltaPercent(ab.ce_full, row.ce_ablated), 1e-12);
  }
}

TEST_F(CvRun, ComparisonOfRealReport) {
  const auto rows = ClassScoreRows(*report_, data_->taxonomy);
  const auto cmp = CompareStrategies(rows, "f1", 0.05);
  // MHDM, its nested view, HHDM and BIOGEO.
  EXPECT_EQ(cmp.strategies.size(), 4u);
  EXPECT_EQ(cmp.formations.back().formation, "ALL");
  EXPECT_EQ(cmp.formations.size(), data_->taxonomy.num_formations() + 1);
}

TEST(Cv, BadKCarriesFoldContext) {
  auto cfg = SmallConfig();
  cfg.top_k = {3, 50};
  const auto data = LoadExperimentData(cfg);
  try {
    RunCv(cfg, data);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadK);
    EXPECT_NE(std::string(e.what()).find("fold"), std::string::npos);
  }
}

TEST(Ablation, DeltaArithmetic) {
  EXPECT_NEAR(AblationDeltaPercent(3.0, 3.333), 11.1, 1e-9);
  EXPECT_NEAR(AblationDeltaPercent(4.0, 3.0), -25.0, 1e-12);
  EXPECT_EQ(CodeOf([] { AblationDeltaPercent(0.0, 1.0); }), ErrorCode::kInvalidConfig);
  AblationReport r;
  r.ce_full = 3.0;
  r.rows = {{Modality::kRsbio, 3.333, AblationDeltaPercent(3.0, 3.333)}};
  EXPECT_NE(r.Csv().find("+11.1%"), std::string::npos);
}

TEST(Ablation, SingleModalityIsRejected) {
  auto cfg = SmallConfig();
  cfg.schemes = {SchemeKind::kMhdm};
  cfg.masks = {ModalityMask{Modality::kAbio}};
  cfg.learners.resize(1);
  cfg.n_folds = 2;
  const auto data = LoadExperimentData(cfg);
  const auto full = RunCv(cfg, data);
  EXPECT_EQ(CodeOf([&] { RunAblation(cfg, data, full); }), ErrorCode::kSingleModality);
}

// ----- comparison on hand-built score tables -----

std::vector<ClassScoreRow> Scores(const std::vector<std::pair<std::string, double>>& strategies,
                                  std::size_t n_classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> base(n_classes);
  for (double& b : base) b = rng.Uniform(0.2, 0.6);
  std::vector<ClassScoreRow> rows;
  for (const auto& [name, shift] : strategies) {
    Rng noise(MixSeed(seed, name));
    for (std::size_t c = 0; c < n_classes; ++c) {
      ClassScoreRow r;
      r.strategy = name;
      r.formation = c % 2 ? "F1" : "F2";
      r.leaf = r.formation + "_" + std::to_string(c);
      r.f1 = r.precision = r.recall = base[c] + shift + 0.01 * noise.Uniform();
      r.support = 10;
      rows.push_back(r);
    }
  }
  return rows;
}

TEST(Compare, IdenticalStrategiesAreNotSignificant) {
  auto rows = Scores({{"a", 0.0}}, 20, 1);
  const auto copy = rows;
  for (auto r : copy) {
    r.strategy = "b";
    rows.push_back(r);
  }
  const auto cmp = CompareStrategies(rows);
  for (const auto& f : cmp.formations) {
    EXPECT_TRUE(f.tested);
    EXPECT_EQ(f.friedman.chi2, 0.0);
    EXPECT_FALSE(f.significant);
    EXPECT_EQ(f.best, -1);
  }
}

TEST(Compare, PlantedGapAndEquivalence) {
  // "good" and its twin "good2" beat "noise" on every class.
  const auto rows = Scores({{"good", 0.3}, {"good2", 0.3}, {"noise", 0.0}}, 40, 2);
  const auto cmp = CompareStrategies(rows, "f1", 0.05);
  const auto& all = cmp.formations.back();
  ASSERT_EQ(all.formation, "ALL");
  EXPECT_TRUE(all.significant);
  ASSERT_GE(all.best, 0);
  const std::string best = cmp.strategies[static_cast<std::size_t>(all.best)];
  EXPECT_TRUE(best == "good" || best == "good2");
  const auto idx = [&](const std::string& s) {
    return static_cast<std::size_t>(std::find(cmp.strategies.begin(), cmp.strategies.end(), s) -
                                    cmp.strategies.begin());
  };
  EXPECT_TRUE(all.equivalent[idx("good")]);
  EXPECT_TRUE(all.equivalent[idx("good2")]);
  EXPECT_FALSE(all.equivalent[idx("noise")]);
  EXPECT_GT(all.friedman.mean_ranks[idx("noise")], all.friedman.mean_ranks[idx("good")]);
  const std::string csv = cmp.TableCsv();
  EXPECT_NE(csv.find("formation,strategy,mean_f1,mean_rank,friedman_p,best,equivalent"), std::string::npos);
}

TEST(Compare, Errors) {
  auto rows = Scores({{"a", 0.0}, {"b", 0.1}}, 10, 3);
  rows.pop_back();
  EXPECT_EQ(CodeOf([&] { CompareStrategies(rows); }), ErrorCode::kMismatchedFolds);
  EXPECT_EQ(CodeOf([] { CompareStrategies(Scores({{"a", 0.0}}, 10, 3)); }), ErrorCode::kDegenerateMatrix);
  EXPECT_EQ(CodeOf([] { CompareStrategies(Scores({{"a", 0.0}, {"b", 0.1}}, 10, 3), "auc"); }),
            ErrorCode::kInvalidConfig);
}

TEST(Compare, ClassScoreFileRoundTrip) {
  testing::TempDir dir("scores");
  auto rows = Scores({{"a", 0.0}, {"b", 0.1}}, 6, 4);
  rows[2].f1 = std::nan("");
  WriteClassScores(dir.File("s.csv"), rows);
  const auto back = ReadClassScores(dir.File("s.csv"));
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_TRUE(std::isnan(back[2].f1));
  EXPECT_EQ(back[3].leaf, rows[3].leaf);
  EXPECT_NEAR(back[3].f1, rows[3].f1, 1e-12);
}

}  // namespace
}  // namespace hdm
