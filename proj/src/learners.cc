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

#include "hdm/learners.h"

#include <algorithm>
#include <cctype>

#include "learner_impl.h"

namespace hdm {

using nlohmann::json;

std::string_view FamilyName(Family f) {
  switch (f) {
    case Family::kForest: return "forest";
    case Family::kBoosting: return "boosting";
    case Family::kMlp: return "mlp";
  }
  return "?";
}

Family ParseFamily(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "forest" || s == "rf" || s == "random_forest") return Family::kForest;
  if (s == "boosting" || s == "gbm" || s == "gradient_boosting") return Family::kBoosting;
  if (s == "mlp" || s == "neural" || s == "nn") return Family::kMlp;
  Fail(ErrorCode::kInvalidConfig, "unknown learner family '" + std::string(name) + "'");
}

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) Fail(ErrorCode::kInvalidConfig, "learner config: " + what);
}

json TreeToJson(const Tree& t) {
  json nodes = json::array();
  for (const TreeNode& n : t.nodes) {
    nodes.push_back(n.leaf >= 0 ? json::array({n.leaf})
                                : json::array({n.feature, n.threshold, n.left, n.right}));
  }
  return {{"dim", t.value_dim}, {"nodes", nodes}, {"values", t.values}};
}

Tree TreeFromJson(const json& j) {
  Tree t;
  t.value_dim = j.at("dim").get<int>();
  t.values = j.at("values").get<std::vector<double>>();
  for (const json& n : j.at("nodes")) {
    TreeNode node;
    if (n.size() == 1) {
      node.leaf = n[0].get<int>();
    } else {
      node.feature = n[0].get<int>();
      node.threshold = n[1].get<double>();
      node.left = n[2].get<int>();
      node.right = n[3].get<int>();
    }
    t.nodes.push_back(node);
  }
  return t;
}

std::vector<std::size_t> SeenIndices(const std::vector<bool>& seen) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c]) out.push_back(c);
  }
  return out;
}

}  // namespace

void LearnerConfig::Validate() const {
  Require(forest.n_trees >= 1, "n_trees >= 1");
  Require(forest.max_depth >= 1, "forest max_depth >= 1");
  Require(forest.min_leaf >= 1, "forest min_leaf >= 1");
  Require(forest.feature_fraction > 0.0 && forest.feature_fraction <= 1.0,
          "feature_fraction in (0, 1]");
  Require(boosting.n_rounds >= 0, "n_rounds >= 0");
  Require(boosting.learning_rate > 0.0, "learning_rate > 0");
  Require(boosting.max_depth >= 1, "boosting max_depth >= 1");
  Require(boosting.min_leaf >= 1, "boosting min_leaf >= 1");
  Require(boosting.subsample > 0.0 && boosting.subsample <= 1.0, "subsample in (0, 1]");
  Require(boosting.l2 >= 0.0, "l2 >= 0");
  Require(!mlp.hidden.empty() && mlp.hidden.size() <= 3, "1 to 3 hidden layers");
  for (int h : mlp.hidden) Require(h >= 1, "hidden width >= 1");
  Require(mlp.learning_rate > 0.0, "mlp learning_rate > 0");
  Require(mlp.batch_size >= 1, "batch_size >= 1");
  Require(mlp.epochs >= 1, "epochs >= 1");
  Require(mlp.patience >= 1, "patience >= 1");
  Require(mlp.momentum >= 0.0 && mlp.momentum < 1.0, "momentum in [0, 1)");
  Require(mlp.validation_fraction >= 0.0 && mlp.validation_fraction <= 0.5,
          "validation_fraction in [0, 0.5]");
  Require(beta > 0.0 && beta < 1.0, "beta in (0, 1)");
  loss.Validate();
}

json LearnerConfig::ToJson() const {
  return {
      {"family", FamilyName(family)},
      {"seed", seed},
      {"class_weights", WeightSchemeName(class_weights)},
      {"beta", beta},
      {"loss", loss.ToJson()},
      {"forest",
       {{"n_trees", forest.n_trees},
        {"max_depth", forest.max_depth},
        {"min_leaf", forest.min_leaf},
        {"feature_fraction", forest.feature_fraction},
        {"bootstrap", forest.bootstrap}}},
      {"boosting",
       {{"n_rounds", boosting.n_rounds},
        {"learning_rate", boosting.learning_rate},
        {"max_depth", boosting.max_depth},
        {"min_leaf", boosting.min_leaf},
        {"subsample", boosting.subsample},
        {"l2", boosting.l2}}},
      {"mlp",
       {{"hidden", mlp.hidden},
        {"learning_rate", mlp.learning_rate},
        {"batch_size", mlp.batch_size},
        {"epochs", mlp.epochs},
        {"patience", mlp.patience},
        {"momentum", mlp.momentum},
        {"validation_fraction", mlp.validation_fraction}}},
  };
}

LearnerConfig LearnerConfig::FromJson(const json& j) {
  LearnerConfig c;
  try {
    if (!j.is_object()) Fail(ErrorCode::kInvalidConfig, "learner config must be an object");
    if (j.contains("family")) c.family = ParseFamily(j.at("family").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("class_weights")) {
      c.class_weights = ParseWeightScheme(j.at("class_weights").get<std::string>());
    }
    c.beta = j.value("beta", c.beta);
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      c.loss = l.is_string() ? LossSpec::FromJson(json{{"loss", l}}) : LossSpec::FromJson(l);
    }
    if (j.contains("forest")) {
      const json& f = j.at("forest");
      c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
      c.forest.max_depth = f.value("max_depth", c.forest.max_depth);
      c.forest.min_leaf = f.value("min_leaf", c.forest.min_leaf);
      c.forest.feature_fraction = f.value("feature_fraction", c.forest.feature_fraction);
      c.forest.bootstrap = f.value("bootstrap", c.forest.bootstrap);
    }
    if (j.contains("boosting")) {
      const json& b = j.at("boosting");
      c.boosting.n_rounds = b.value("n_rounds", c.boosting.n_rounds);
      c.boosting.learning_rate = b.value("learning_rate", c.boosting.learning_rate);
      c.boosting.max_depth = b.value("max_depth", c.boosting.max_depth);
      c.boosting.min_leaf = b.value("min_leaf", c.boosting.min_leaf);
      c.boosting.subsample = b.value("subsample", c.boosting.subsample);
      c.boosting.l2 = b.value("l2", c.boosting.l2);
    }
    if (j.contains("mlp")) {
      const json& m = j.at("mlp");
      if (m.contains("hidden")) {
        const json& h = m.at("hidden");
        c.mlp.hidden = h.is_array() ? h.get<std::vector<int>>() : std::vector<int>{h.get<int>()};
      }
      c.mlp.learning_rate = m.value("learning_rate", c.mlp.learning_rate);
      c.mlp.batch_size = m.value("batch_size", c.mlp.batch_size);
      c.mlp.epochs = m.value("epochs", c.mlp.epochs);
      c.mlp.patience = m.value("patience", c.mlp.patience);
      c.mlp.momentum = m.value("momentum", c.mlp.momentum);
      c.mlp.validation_fraction = m.value("validation_fraction", c.mlp.validation_fraction);
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, std::string("learner config: ") + e.what());
  }
  c.Validate();
  return c;
}

FittedModel Fit(const LearnerConfig& config, const Matrix& X, const FeatureSchema& schema,
                std::span<const int> y, std::vector<std::string> classes) {
  config.Validate();
  const std::size_t K = classes.size();
  if (K == 0) Fail(ErrorCode::kInvalidConfig, "no classes");
  if (y.size() != X.rows()) Fail(ErrorCode::kShapeMismatch, "labels and rows differ in length");
  if (X.cols() != schema.columns.size()) {
    Fail(ErrorCode::kSchemaMismatch, "matrix columns do not match the schema");
  }
  if (X.rows() == 0) Fail(ErrorCode::kNoTrainingRows, "no training rows");
  if (X.rows() < K) {
    Fail(ErrorCode::kInsufficientData, std::to_string(X.rows()) + " rows for " +
                                           std::to_string(K) + " classes");
  }
  std::vector<double> counts(K, 0.0);
  for (int t : y) {
    if (t < 0 || static_cast<std::size_t>(t) >= K) Fail(ErrorCode::kUnknownLabel, "label index");
    counts[static_cast<std::size_t>(t)] += 1.0;
  }

  FittedModel m;
  m.config = config;
  m.schema = schema;
  m.classes = std::move(classes);
  m.seen.resize(K);
  for (std::size_t c = 0; c < K; ++c) m.seen[c] = counts[c] > 0.0;
  const auto seen_idx = SeenIndices(m.seen);
  if (seen_idx.size() == 1) {
    std::vector<double> p(K, 0.0);
    p[seen_idx[0]] = 1.0;
    m.params = ConstantModel{std::move(p)};
    return m;
  }

  std::vector<double> seen_counts;
  for (std::size_t c : seen_idx) seen_counts.push_back(counts[c]);
  const auto seen_w = ComputeClassWeights(seen_counts, config.class_weights, config.beta).w;
  std::vector<double> class_weight(K, 0.0);
  for (std::size_t i = 0; i < seen_idx.size(); ++i) class_weight[seen_idx[i]] = seen_w[i];

  const int threads = config.threads > 0 ? config.threads : DefaultThreads();
  switch (config.family) {
    case Family::kForest:
      m.params = detail::FitForest(config, X, y, K, class_weight, threads);
      break;
    case Family::kBoosting:
      m.params = detail::FitBoosting(config, X, y, m.seen, class_weight, threads);
      break;
    case Family::kMlp:
      m.params = detail::FitMlp(config, X, schema, y, m.seen, threads);
      break;
  }
  return m;
}

FittedModel FitConstant(std::vector<std::string> classes, std::vector<double> probs,
                        const FeatureSchema& schema) {
  if (probs.size() != classes.size()) Fail(ErrorCode::kShapeMismatch, "one probability per class");
  FittedModel m;
  m.schema = schema;
  m.classes = std::move(classes);
  m.seen.resize(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) m.seen[c] = probs[c] > 0.0;
  m.params = ConstantModel{std::move(probs)};
  return m;
}

Matrix FittedModel::PredictMatrix(const Matrix& X, int threads) const {
  if (X.cols() != schema.columns.size()) {
    Fail(ErrorCode::kSchemaMismatch, "expected " + std::to_string(schema.columns.size()) +
                                         " feature columns, got " + std::to_string(X.cols()));
  }
  if (threads <= 0) threads = DefaultThreads();
  const std::size_t K = classes.size();
  if (const auto* c = std::get_if<ConstantModel>(&params)) {
    Matrix out(X.rows(), K);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      std::copy(c->probs.begin(), c->probs.end(), out.row(r).begin());
    }
    return out;
  }
  if (const auto* f = std::get_if<ForestModel>(&params)) {
    return detail::PredictForest(*f, X, K, threads);
  }
  if (const auto* b = std::get_if<BoostingModel>(&params)) {
    return detail::PredictBoosting(*b, X, seen, threads);
  }
  return detail::PredictMlp(std::get<MlpModel>(params), X, seen, threads);
}

ProbabilityTable FittedModel::PredictProba(const Matrix& X, const FeatureSchema& input_schema,
                                           int threads) const {
  if (input_schema.Hash() != schema.Hash()) {
    Fail(ErrorCode::kSchemaMismatch, "feature schema differs from the training schema");
  }
  ProbabilityTable t(classes, 0);
  t.p = PredictMatrix(X, threads);
  t.flagged_rows.assign(X.rows(), false);
  for (std::size_t c = 0; c < classes.size(); ++c) t.unseen_classes[c] = !seen[c];
  return t;
}

json FittedModel::ToJson() const {
  json j;
  j["format"] = "hdm-model-1";
  j["config"] = config.ToJson();
  j["schema"] = schema.ToJson();
  j["classes"] = classes;
  std::vector<int> seen_flags(seen.begin(), seen.end());
  j["seen"] = seen_flags;
  if (const auto* c = std::get_if<ConstantModel>(&params)) {
    j["kind"] = "constant";
    j["probs"] = c->probs;
  } else if (const auto* f = std::get_if<ForestModel>(&params)) {
    j["kind"] = "forest";
    json trees = json::array();
    for (const Tree& t : f->trees) trees.push_back(TreeToJson(t));
    j["trees"] = std::move(trees);
  } else if (const auto* b = std::get_if<BoostingModel>(&params)) {
    j["kind"] = "boosting";
    j["init_score"] = b->init_score;
    j["learning_rate"] = b->learning_rate;
    json rounds = json::array();
    for (const auto& round : b->rounds) {
      json r = json::array();
      for (const Tree& t : round) r.push_back(TreeToJson(t));
      rounds.push_back(std::move(r));
    }
    j["rounds"] = std::move(rounds);
  } else {
    const auto& m = std::get<MlpModel>(params);
    j["kind"] = "mlp";
    j["mean"] = m.scaler.mean;
    j["scale"] = m.scaler.scale;
    j["layer_sizes"] = m.layer_sizes;
    j["params"] = m.params;
    j["epochs_run"] = m.epochs_run;
  }
  return j;
}

FittedModel FittedModel::FromJson(const json& j) {
  FittedModel m;
  try {
    if (j.value("format", std::string()) != "hdm-model-1") {
      Fail(ErrorCode::kSchemaError, "not a model file");
    }
    m.config = LearnerConfig::FromJson(j.at("config"));
    m.schema = FeatureSchema::FromJson(j.at("schema"));
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (int s : j.at("seen").get<std::vector<int>>()) m.seen.push_back(s != 0);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
      m.params = ConstantModel{j.at("probs").get<std::vector<double>>()};
    } else if (kind == "forest") {
      ForestModel f;
      for (const json& t : j.at("trees")) f.trees.push_back(TreeFromJson(t));
      m.params = std::move(f);
    } else if (kind == "boosting") {
      BoostingModel b;
      b.init_score = j.at("init_score").get<std::vector<double>>();
      b.learning_rate = j.at("learning_rate").get<double>();
      for (const json& r : j.at("rounds")) {
        std::vector<Tree> round;
        for (const json& t : r) round.push_back(TreeFromJson(t));
        b.rounds.push_back(std::move(round));
      }
      m.params = std::move(b);
    } else if (kind == "mlp") {
      MlpModel mm;
      mm.scaler.mean = j.at("mean").get<std::vector<double>>();
      mm.scaler.scale = j.at("scale").get<std::vector<double>>();
      mm.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
      mm.params = j.at("params").get<std::vector<double>>();
      mm.epochs_run = j.value("epochs_run", 0);
      m.params = std::move(mm);
    } else {
      Fail(ErrorCode::kSchemaError, "unknown model kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaError, std::string("model file: ") + e.what());
  }
  if (m.seen.size() != m.classes.size()) Fail(ErrorCode::kSchemaError, "seen mask length");
  return m;
}

}  // namespace hdm
