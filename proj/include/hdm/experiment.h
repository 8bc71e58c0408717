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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdm/attribution.h"
#include "hdm/dataset.h"
#include "hdm/learners.h"
#include "hdm/metrics.h"
#include "hdm/schemes.h"
#include "hdm/spatial_cv.h"
#include "hdm/stats.h"
#include "hdm/synthetic.h"
#include "json.hpp"

namespace hdm {

struct LearnerPlan {
  std::string name;
  SearchSpace space;
  std::size_t budget = 3;
};

struct AttributionPlan {
  std::size_t permutations = 200;
  std::size_t background = 100;
  std::size_t samples_per_formation = 30;
};

enum class FoldMode { kSpatial, kRandom };

struct ExperimentConfig {
  std::string dataset;                     // CSV path; unused with `synthetic`
  std::optional<SyntheticSpec> synthetic;
  std::string taxonomy;                    // JSON path; empty: read from the dataset
  std::vector<SchemeKind> schemes = {SchemeKind::kMhdm, SchemeKind::kHhdm, SchemeKind::kBiogeo};
  std::vector<ModalityMask> masks;         // default: every modality present
  std::vector<LearnerPlan> learners;       // default: forest, boosting, mlp
  int n_folds = 4;
  std::optional<double> block_size;        // default: DefaultBlockSize
  // Random row-level folds, only as a leakage baseline.
  FoldMode fold_mode = FoldMode::kSpatial;
  std::uint64_t seed = 1;
  double tuning_fraction = 0.1;
  std::vector<std::size_t> top_k = {3, 5};
  double stratification_tolerance = 0.5;
  double weight_floor = 1e-6;
  MissingPolicy missing = MissingPolicy::kDropRow;
  AttributionPlan attribution;
  std::string output_dir;
  int threads = 0;  // runtime only, never echoed

  void Validate() const;
  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig Load(const std::string& path);
};

struct ExperimentData {
  SampleTable table;
  Taxonomy taxonomy;
};

ExperimentData LoadExperimentData(const ExperimentConfig& config);

// Strategy label such as "abio,rsbio-HHDM".
std::string StrategyName(SchemeKind scheme, const ModalityMask& mask);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

MetricSummary Summarize(const std::vector<double>& values);

struct EvalMetrics {
  std::size_t n = 0;
  double top1 = 0.0;
  std::vector<double> top_k;  // aligned with ExperimentConfig::top_k
  double coverage_error = 0.0;
};

struct MemberFoldResult {
  std::string learner;
  LearnerConfig config;
  double tune_score = 0.0;   // best macro F1 of the search (flat task)
  double holdout_score = 0.0;  // strategy macro F1 on the tuning holdout
  double weight = 1.0;
  EvalMetrics test;
};

struct StrategyFoldResult {
  int fold = 0;
  std::size_t n_train = 0, n_test = 0, n_inner = 0, n_holdout = 0;
  std::vector<MemberFoldResult> members;
  EvalMetrics ensemble;
  std::size_t flagged_rows = 0;
};

struct StrategyResult {
  std::string name;
  SchemeKind scheme = SchemeKind::kMhdm;
  ModalityMask mask;
  std::vector<StrategyFoldResult> folds;
  // Over folds, ensemble: "top1", "top<k>", "coverage_error".
  std::map<std::string, MetricSummary> aggregate;
  std::map<std::string, std::map<std::string, MetricSummary>> member_aggregate;
  // Pooled out-of-fold ensemble predictions: argmax over all leaves, and
  // argmax within the true formation (conditional tables for hhdm, nested
  // views otherwise).
  ClassMetrics flat;
  ClassMetrics within;
};

struct FoldInfo {
  int fold = 0;
  std::size_t n_train = 0, n_test = 0;
  std::size_t blocks = 0;
  double seconds = 0.0;
  long peak_rss_kb = 0;
};

struct CvReport {
  nlohmann::json config;
  std::string fold_mode;
  double block_size = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_blocks = 0;
  std::vector<FoldInfo> folds;
  std::size_t stratification_issues = 0;
  std::size_t leakage_checks = 0;
  std::vector<StrategyResult> strategies;

  const StrategyResult* Find(std::string_view name) const;
  // Deterministic: no timings.
  nlohmann::json ToJson() const;
  nlohmann::json TimingJson() const;
};

// Runs every (scheme, mask) strategy over the folds. Errors are rethrown
// with fold and strategy context.
CvReport RunCv(const ExperimentConfig& config, const ExperimentData& data);

// report.json, timing.json, class_metrics.csv, ensemble manifests.
void WriteCvOutputs(const CvReport& report, const Taxonomy& taxonomy, const std::string& dir);

// ----- ablation -----

double AblationDeltaPercent(double ce_full, double ce_ablated);

struct AblationRow {
  Modality modality = Modality::kAbio;
  double ce_ablated = 0.0;
  double delta_percent = 0.0;
};

struct AblationReport {
  std::string strategy;
  ModalityMask mask;
  double ce_full = 0.0;
  std::vector<AblationRow> rows;

  nlohmann::json ToJson() const;
  std::string Csv() const;
};

// Drops one modality at a time from the first mhdm strategy of `full`,
// reusing its tuned configs and seeds. Coverage error is the fold mean of
// the ensemble. Throws kSingleModality.
AblationReport RunAblation(const ExperimentConfig& config, const ExperimentData& data,
                           const CvReport& full);

// ----- strategy comparison -----

struct ClassScoreRow {
  std::string strategy;
  std::string formation;
  std::string leaf;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Rows for every strategy of a report: the default view plus, for mhdm,
// "<name> (nested)".
std::vector<ClassScoreRow> ClassScoreRows(const CvReport& report, const Taxonomy& taxonomy);
std::vector<ClassScoreRow> ReadClassScores(const std::string& path);
void WriteClassScores(const std::string& path, const std::vector<ClassScoreRow>& rows);

struct FormationComparison {
  std::string formation;  // "ALL" for the pooled test
  std::size_t n_classes = 0;
  std::size_t dropped = 0;
  bool tested = false;     // false when fewer than 2 complete classes
  FriedmanResult friedman;
  bool significant = false;
  std::optional<NemenyiResult> nemenyi;
  int best = -1;           // strategy index, only when significant
  std::vector<bool> equivalent;
  std::vector<double> mean_score;
};

struct ComparisonReport {
  std::string metric = "f1";
  double alpha = 0.05;
  std::vector<std::string> strategies;
  std::vector<FormationComparison> formations;

  nlohmann::json ToJson() const;
  // formation,strategy,mean_<metric>,mean_rank,friedman_p,best,equivalent
  std::string TableCsv() const;
};

// Friedman per formation (and pooled) over class-wise scores, Nemenyi when
// significant. Throws kMismatchedFolds when strategies cover different
// classes, kDegenerateMatrix with fewer than 2 strategies.
ComparisonReport CompareStrategies(const std::vector<ClassScoreRow>& rows,
                                   const std::string& metric = "f1", double alpha = 0.05);

// ----- attribution -----

struct FormationAttribution {
  std::string formation;
  ModalityShares shares;
  double mean_efficiency_gap = 0.0;
  double mean_standard_error = 0.0;
};

struct AttributionReport {
  std::string strategy;
  std::vector<FormationAttribution> formations;
  ModalityShares overall;

  nlohmann::json ToJson() const;
  // formation,modality,share,samples,zero_samples
  std::string Csv() const;
};

// Fits hhdm with the first mask and the first learner's base config on all
// rows, then explains the predicted class of each formation model.
AttributionReport RunAttribution(const ExperimentConfig& config, const ExperimentData& data);

}  // namespace hdm
