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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hdm/dataset.h"
#include "hdm/losses.h"
#include "hdm/probability.h"
#include "json.hpp"

namespace hdm {

enum class Family { kForest, kBoosting, kMlp };

std::string_view FamilyName(Family f);
Family ParseFamily(std::string_view name);

struct ForestParams {
  int n_trees = 50;
  int max_depth = 12;
  int min_leaf = 2;
  double feature_fraction = 0.5;
  bool bootstrap = true;
};

struct BoostingParams {
  int n_rounds = 60;
  double learning_rate = 0.1;
  int max_depth = 4;
  int min_leaf = 5;
  double subsample = 0.8;
  double l2 = 1.0;
};

struct MlpParams {
  std::vector<int> hidden = {64};
  double learning_rate = 0.01;
  int batch_size = 64;
  int epochs = 100;
  int patience = 10;
  double momentum = 0.9;
  // Share of the training rows held back for early stopping.
  double validation_fraction = 0.1;
};

struct LearnerConfig {
  Family family = Family::kForest;
  ForestParams forest;
  BoostingParams boosting;
  MlpParams mlp;
  LossSpec loss;                                    // mlp
  WeightScheme class_weights = WeightScheme::kUniform;  // trees
  double beta = 0.999;
  std::uint64_t seed = 1;
  // 0 selects DefaultThreads().
  int threads = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static LearnerConfig FromJson(const nlohmann::json& j);
};

// Split node: go left when x[feature] <= threshold. Leaf nodes point into
// `values` (value_dim doubles per leaf).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> values;
  int value_dim = 1;

  std::span<const double> Evaluate(std::span<const double> x) const;
  int depth() const;
};

struct ConstantModel {
  std::vector<double> probs;
};

struct ForestModel {
  std::vector<Tree> trees;
};

struct BoostingModel {
  std::vector<double> init_score;
  double learning_rate = 0.1;
  std::vector<std::vector<Tree>> rounds;  // [round][class]; empty tree for unseen classes
};

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for binary columns

  static Standardizer Fit(const Matrix& X, const FeatureSchema& schema);
  Matrix Apply(const Matrix& X) const;
};

struct MlpModel {
  Standardizer scaler;
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<double> params;            // per layer: W (out x in), then b
  int epochs_run = 0;
};

// Learned parameters plus what is needed to refuse mismatched inputs.
struct FittedModel {
  LearnerConfig config;
  FeatureSchema schema;
  std::vector<std::string> classes;
  std::vector<bool> seen;  // class occurred in training
  std::variant<ConstantModel, ForestModel, BoostingModel, MlpModel> params;

  bool is_constant() const { return std::holds_alternative<ConstantModel>(params); }

  // Throws kSchemaMismatch when `schema` differs from the training schema.
  ProbabilityTable PredictProba(const Matrix& X, const FeatureSchema& schema,
                                int threads = 0) const;
  // Same without the schema check; X must have the training layout.
  Matrix PredictMatrix(const Matrix& X, int threads = 0) const;

  nlohmann::json ToJson() const;
  static FittedModel FromJson(const nlohmann::json& j);
};

// y holds indices into `classes`. Classes absent from y get probability 0.
// Throws kInsufficientData when there are fewer rows than classes.
FittedModel Fit(const LearnerConfig& config, const Matrix& X, const FeatureSchema& schema,
                std::span<const int> y, std::vector<std::string> classes);

// Model that returns fixed probabilities (one-leaf formations, degenerate fits).
FittedModel FitConstant(std::vector<std::string> classes, std::vector<double> probs,
                        const FeatureSchema& schema);

// ----- multilayer perceptron internals, exposed for gradient checks -----

class MlpNetwork {
 public:
  MlpNetwork(std::vector<std::size_t> layer_sizes, std::uint64_t seed);
  explicit MlpNetwork(const MlpModel& model);

  std::size_t num_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  void Logits(std::span<const double> x, std::span<double> out) const;
  Matrix Logits(const Matrix& X, int threads = 1) const;

  // Mean loss over `rows` of X; writes the mean gradient when grad is
  // non-empty. Rows are processed in fixed 16-row chunks whose partial sums
  // are added in chunk order, so the result does not depend on `threads`.
  double LossGradient(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                      const PreparedLoss& loss, std::span<double> grad, int threads = 1) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

// ----- randomized hyperparameter search -----

// One searchable parameter: an explicit list of values or a numeric range.
struct SearchDimension {
  std::vector<nlohmann::json> choices;
  bool is_range = false;
  bool integer = false;
  bool log_scale = false;
  double lo = 0.0;
  double hi = 0.0;
};

// Parameters name keys of the family's section of LearnerConfig::ToJson()
// ("max_depth", "hidden", ...) or top-level keys ("class_weights", "loss").
struct SearchSpace {
  LearnerConfig base;
  std::map<std::string, SearchDimension> params;

  // {"family":"forest","base":{...},"params":{"max_depth":[4,8],
  //  "learning_rate":{"min":0.01,"max":0.3,"log":true}}}
  nlohmann::json ToJson() const;
  static SearchSpace FromJson(const nlohmann::json& j);
  static SearchSpace Default(Family family);

  // Finite when every dimension is a choice list; 0 otherwise.
  std::size_t FiniteSize() const;
  // `budget` configs: distinct ones when the space is finite, else iid.
  std::vector<LearnerConfig> Sample(std::size_t budget, std::uint64_t seed) const;
};

struct TuneResult {
  LearnerConfig best;
  double best_score = 0.0;
  std::vector<LearnerConfig> tried;
  std::vector<double> scores;  // macro F1 on the holdout
};

// Fits every sampled config on the inner rows and scores macro F1 on the
// holdout; the first best draw wins ties.
TuneResult Tune(const SearchSpace& space, std::size_t budget, const Matrix& X_inner,
                std::span<const int> y_inner, const Matrix& X_holdout,
                std::span<const int> y_holdout, const FeatureSchema& schema,
                const std::vector<std::string>& classes, std::uint64_t seed);

}  // namespace hdm
