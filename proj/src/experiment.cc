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

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hdm/ensemble.h"
#include "hdm/kernels.h"

namespace hdm {

using nlohmann::json;

namespace {

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, path + ": " + e.what());
  }
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string MaskLabel(const ModalityMask& mask) {
  for (const char* preset : {"A", "AR", "ARM", "ARMS"}) {
    if (mask == ModalityMask::Parse(preset)) return preset;
  }
  return mask.ToString();
}

long PeakRssKb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

std::vector<LearnerPlan> DefaultLearners() {
  std::vector<LearnerPlan> out;
  for (Family f : {Family::kForest, Family::kBoosting, Family::kMlp}) {
    out.push_back({std::string(FamilyName(f)), SearchSpace::Default(f), 3});
  }
  return out;
}

LearnerPlan LearnerPlanFromJson(const json& j) {
  LearnerPlan p;
  json space = j;
  if (!space.contains("params")) {
    json base = j.value("base", json::object());
    if (j.contains("family")) base["family"] = j.at("family");
    const SearchSpace def = SearchSpace::Default(LearnerConfig::FromJson(base).family);
    space["params"] = def.ToJson().at("params");
  }
  p.space = SearchSpace::FromJson(space);
  p.name = j.value("name", std::string(FamilyName(p.space.base.family)));
  p.budget = j.value("budget", p.budget);
  return p;
}

json LearnerPlanToJson(const LearnerPlan& p) {
  json j = p.space.ToJson();
  j["name"] = p.name;
  j["budget"] = p.budget;
  return j;
}

ModalityMask PresentMask(const SampleTable& table) { return table.schema.PresentModalities(); }

}  // namespace

// ----- config -----

void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) Fail(ErrorCode::kInvalidConfig, "experiment config: " + what);
  };
  require(synthetic.has_value() != !dataset.empty(), "exactly one of dataset or synthetic");
  require(!schemes.empty(), "at least one scheme");
  require(n_folds >= 2, "n_folds >= 2");
  require(!block_size || *block_size > 0.0, "block_size > 0");
  require(tuning_fraction > 0.0 && tuning_fraction < 1.0, "tuning_fraction in (0, 1)");
  for (std::size_t k : top_k) require(k >= 1, "top_k entries >= 1");
  require(stratification_tolerance > 0.0, "stratification_tolerance > 0");
  require(weight_floor >= 0.0, "weight_floor >= 0");
  for (const auto& m : masks) {
    if (m.empty()) Fail(ErrorCode::kEmptyMask, "experiment config: empty modality mask");
  }
  std::set<std::string> names;
  for (const auto& l : learners) {
    require(l.budget >= 1, "learner budget >= 1");
    require(names.insert(l.name).second, "duplicate learner name '" + l.name + "'");
  }
  require(attribution.permutations >= 1 && attribution.background >= 1 &&
              attribution.samples_per_formation >= 1,
          "attribution sizes >= 1");
  if (synthetic) synthetic->Validate();
}

json ExperimentConfig::ToJson() const {
  json j;
  if (synthetic) {
    j["synthetic"] = synthetic->ToJson();
  } else {
    j["dataset"] = dataset;
  }
  j["taxonomy"] = taxonomy;
  json s = json::array();
  for (SchemeKind k : schemes) s.push_back(SchemeName(k));
  j["schemes"] = s;
  json m = json::array();
  for (const auto& mask : masks) m.push_back(mask.ToString());
  j["masks"] = m;
  json l = json::array();
  for (const auto& p : learners) l.push_back(LearnerPlanToJson(p));
  j["learners"] = l;
  j["n_folds"] = n_folds;
  j["block_size"] = block_size ? json(*block_size) : json(nullptr);
  j["fold_mode"] = fold_mode == FoldMode::kSpatial ? "spatial" : "random";
  j["seed"] = seed;
  j["tuning_fraction"] = tuning_fraction;
  j["top_k"] = top_k;
  j["stratification_tolerance"] = stratification_tolerance;
  j["weight_floor"] = weight_floor;
  j["missing"] = missing == MissingPolicy::kDropRow ? "drop" : "median";
  j["attribution"] = {{"permutations", attribution.permutations},
                      {"background", attribution.background},
                      {"samples_per_formation", attribution.samples_per_formation}};
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const json& j) {
  static const std::set<std::string> known = {
      "dataset",        "synthetic", "taxonomy",       "schemes",
      "masks",          "learners",  "n_folds",        "block_size",
      "fold_mode",      "seed",      "tuning_fraction", "top_k",
      "stratification_tolerance",    "weight_floor",   "missing",
      "attribution",    "output_dir", "threads"};
  if (!j.is_object()) Fail(ErrorCode::kInvalidConfig, "experiment config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) Fail(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    c.dataset = j.value("dataset", std::string());
    if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
      c.synthetic = SyntheticSpec::FromJson(j.at("synthetic"));
    }
    c.taxonomy = j.value("taxonomy", std::string());
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const json& s : j.at("schemes")) c.schemes.push_back(ParseScheme(s.get<std::string>()));
    }
    if (j.contains("masks")) {
      for (const json& m : j.at("masks")) c.masks.push_back(ModalityMask::Parse(m.get<std::string>()));
    }
    if (j.contains("learners")) {
      for (const json& l : j.at("learners")) c.learners.push_back(LearnerPlanFromJson(l));
    } else {
      c.learners = DefaultLearners();
    }
    c.n_folds = j.value("n_folds", c.n_folds);
    if (j.contains("block_size") && !j.at("block_size").is_null()) {
      c.block_size = j.at("block_size").get<double>();
    }
    const std::string mode = j.value("fold_mode", std::string("spatial"));
    if (mode == "spatial") {
      c.fold_mode = FoldMode::kSpatial;
    } else if (mode == "random") {
      c.fold_mode = FoldMode::kRandom;
    } else {
      Fail(ErrorCode::kInvalidConfig, "fold_mode must be spatial or random");
    }
    c.seed = j.value("seed", c.seed);
    c.tuning_fraction = j.value("tuning_fraction", c.tuning_fraction);
    c.top_k = j.value("top_k", c.top_k);
    c.stratification_tolerance = j.value("stratification_tolerance", c.stratification_tolerance);
    c.weight_floor = j.value("weight_floor", c.weight_floor);
    const std::string missing = j.value("missing", std::string("drop"));
    if (missing == "drop") {
      c.missing = MissingPolicy::kDropRow;
    } else if (missing == "median") {
      c.missing = MissingPolicy::kMedianImpute;
    } else {
      Fail(ErrorCode::kInvalidConfig, "missing must be drop or median");
    }
    if (j.contains("attribution")) {
      const json& a = j.at("attribution");
      c.attribution.permutations = a.value("permutations", c.attribution.permutations);
      c.attribution.background = a.value("background", c.attribution.background);
      c.attribution.samples_per_formation =
          a.value("samples_per_formation", c.attribution.samples_per_formation);
    }
    c.output_dir = j.value("output_dir", std::string());
    c.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, std::string("experiment config: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  return FromJson(ReadJsonFile(path));
}

ExperimentData LoadExperimentData(const ExperimentConfig& config) {
  if (config.synthetic) {
    auto [table, taxonomy] = GenerateSynthetic(*config.synthetic);
    return {std::move(table), std::move(taxonomy)};
  }
  Taxonomy taxonomy = config.taxonomy.empty() ? TaxonomyFromDataset(config.dataset)
                                              : Taxonomy::FromJson(ReadJsonFile(config.taxonomy));
  LoadOptions opts;
  opts.missing = config.missing;
  SampleTable table = LoadDataset(config.dataset, taxonomy, opts);
  return {std::move(table), std::move(taxonomy)};
}

std::string StrategyName(SchemeKind scheme, const ModalityMask& mask) {
  if (scheme == SchemeKind::kBiogeo) return "BIOGEO";
  return MaskLabel(mask) + "-" + Upper(SchemeName(scheme));
}

MetricSummary Summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

// ----- cross-validation -----

namespace {

struct FoldData {
  int fold = 0;
  std::uint64_t seed = 0;
  const Taxonomy* taxonomy = nullptr;
  SampleTable train, test, inner, holdout;
};

struct MemberChoice {
  std::string name;
  LearnerConfig config;
  double tune_score = 0.0;
};

struct FoldOutput {
  StrategyFoldResult result;
  std::vector<int> flat_pred;    // per test row
  std::vector<int> within_pred;  // per test row
};

EvalMetrics Evaluate(const Matrix& probs, const std::vector<int>& truth,
                     const std::vector<std::size_t>& top_k, int threads) {
  EvalMetrics m;
  m.n = truth.size();
  m.top1 = TopKAccuracy(probs, truth, 1, threads);
  for (std::size_t k : top_k) m.top_k.push_back(TopKAccuracy(probs, truth, k, threads));
  m.coverage_error = CoverageError(probs, truth, threads);
  return m;
}

std::uint64_t MemberSeed(std::uint64_t fold_seed, const std::string& learner) {
  return MixSeed(fold_seed, "model/" + learner);
}

std::vector<MemberChoice> TuneMembers(const ExperimentConfig& cfg, const FoldData& fd,
                                      const ModalityMask& mask) {
  const auto cols = fd.inner.schema.ColumnsFor(mask);
  if (cols.empty()) Fail(ErrorCode::kEmptyMask, "no feature columns for " + mask.ToString());
  const FeatureSchema schema = fd.inner.schema.Select(cols);
  const Matrix X_inner = fd.inner.features.SelectCols(cols);
  const Matrix X_hold = fd.holdout.features.SelectCols(cols);
  std::vector<MemberChoice> out;
  for (const LearnerPlan& plan : cfg.learners) {
    SearchSpace space = plan.space;
    space.base.seed = MemberSeed(fd.seed, plan.name);
    const TuneResult t =
        Tune(space, plan.budget, X_inner, fd.inner.leaf, X_hold, fd.holdout.leaf, schema,
             fd.taxonomy->leaves(), MixSeed(fd.seed, "tune/" + mask.ToString() + "/" + plan.name));
    LearnerConfig best = t.best;
    best.threads = cfg.threads;
    out.push_back({plan.name, best, t.best_score});
  }
  return out;
}

FoldOutput EvaluateStrategyFold(const ExperimentConfig& cfg, const FoldData& fd, SchemeKind scheme,
                                const ModalityMask& mask, const std::vector<MemberChoice>& members) {
  const Taxonomy& tax = *fd.taxonomy;
  const std::size_t K = tax.num_leaves();
  FoldOutput out;
  StrategyFoldResult& res = out.result;
  res.fold = fd.fold;
  res.n_train = fd.train.rows();
  res.n_test = fd.test.rows();
  res.n_inner = fd.inner.rows();
  res.n_holdout = fd.holdout.rows();

  std::vector<ProbabilityTable> joints;
  std::vector<std::vector<ProbabilityTable>> conds;
  std::vector<double> scores;
  for (const MemberChoice& mc : members) {
    const std::uint64_t seed = MemberSeed(fd.seed, mc.name);
    const StrategyModel inner_model = TrainStrategy(scheme, fd.inner, tax, mask, mc.config, seed);
    const ProbabilityTable hold = PredictJoint(inner_model, fd.holdout, cfg.threads);
    const double score = MacroF1(hold.Argmax(), fd.holdout.leaf, K);

    const StrategyModel model = TrainStrategy(scheme, fd.train, tax, mask, mc.config, seed);
    joints.push_back(PredictJoint(model, fd.test, cfg.threads));
    if (scheme == SchemeKind::kHhdm) conds.push_back(PredictConditional(model, fd.test, cfg.threads));

    MemberFoldResult mr;
    mr.learner = mc.name;
    mr.config = mc.config;
    mr.tune_score = mc.tune_score;
    mr.holdout_score = score;
    mr.test = Evaluate(joints.back().p, fd.test.leaf, cfg.top_k, cfg.threads);
    res.members.push_back(std::move(mr));
    scores.push_back(score);
  }
  const auto weights = WeightsFromScores(scores, cfg.weight_floor);
  for (std::size_t i = 0; i < weights.size(); ++i) res.members[i].weight = weights[i];
  const ProbabilityTable ens = Combine(joints, weights, cfg.threads);
  res.ensemble = Evaluate(ens.p, fd.test.leaf, cfg.top_k, cfg.threads);
  res.flagged_rows = static_cast<std::size_t>(
      std::count(ens.flagged_rows.begin(), ens.flagged_rows.end(), true));
  out.flat_pred = ens.Argmax();

  out.within_pred.assign(fd.test.rows(), kNoLabel);
  for (std::size_t f = 0; f < tax.num_formations(); ++f) {
    std::vector<int> local;
    if (scheme == SchemeKind::kHhdm) {
      std::vector<ProbabilityTable> per_member;
      for (const auto& c : conds) per_member.push_back(c[f]);
      local = Combine(per_member, weights).Argmax();
    } else {
      local = NestedView(ens, tax, tax.formations()[f]).Argmax();
    }
    const auto& leaves = tax.leaves_of(f);
    for (std::size_t r = 0; r < fd.test.rows(); ++r) {
      if (fd.test.formation[r] == static_cast<int>(f)) {
        out.within_pred[r] = static_cast<int>(leaves[static_cast<std::size_t>(local[r])]);
      }
    }
  }
  return out;
}

struct StrategyPlanItem {
  SchemeKind scheme;
  ModalityMask mask;
};

ExperimentConfig Resolve(const ExperimentConfig& config, const ExperimentData& data) {
  ExperimentConfig c = config;
  if (c.masks.empty()) c.masks.push_back(PresentMask(data.table));
  if (c.learners.empty()) c.learners = DefaultLearners();
  return c;
}

std::vector<StrategyPlanItem> PlanStrategies(const ExperimentConfig& c) {
  std::vector<StrategyPlanItem> out;
  bool biogeo_done = false;
  for (const auto& mask : c.masks) {
    for (SchemeKind s : c.schemes) {
      if (s == SchemeKind::kBiogeo) {
        if (biogeo_done) continue;
        biogeo_done = true;
      }
      out.push_back({s, mask});
    }
  }
  return out;
}

BlockGrid MakeGrid(const ExperimentConfig& c, const SampleTable& table) {
  if (c.fold_mode == FoldMode::kRandom) {
    BlockGrid g;
    g.block_of_row.resize(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) g.block_of_row[r] = static_cast<std::int64_t>(r);
    return g;
  }
  return AssignBlocks(table, c.block_size ? *c.block_size : DefaultBlockSize(table));
}

FoldData MakeFoldData(const ExperimentConfig& c, const ExperimentData& data, const BlockGrid& grid,
                      const FoldPlan& plan, int fold, std::size_t* leakage_checks) {
  FoldData fd;
  fd.fold = fold;
  fd.seed = MixSeed(c.seed, "fold/" + std::to_string(fold));
  fd.taxonomy = &data.taxonomy;
  const auto train = plan.TrainRows(fold);
  const auto test = plan.TestRows(fold);
  const std::string ctx = "fold " + std::to_string(fold);
  AuditLeakage(grid, train, test, ctx);
  const TuningSplit split =
      MakeTuningSplit(grid, data.table, train, c.tuning_fraction, MixSeed(fd.seed, "split"));
  AuditLeakage(grid, split.inner_train, split.holdout, ctx + " tuning split");
  AuditLeakage(grid, split.inner_train, test, ctx + " inner/test");
  AuditLeakage(grid, split.holdout, test, ctx + " holdout/test");
  if (leakage_checks) *leakage_checks += 4;
  fd.train = data.table.Subset(train);
  fd.test = data.table.Subset(test);
  fd.inner = data.table.Subset(split.inner_train);
  fd.holdout = data.table.Subset(split.holdout);
  return fd;
}

[[noreturn]] void Rethrow(const Error& e, const std::string& context) {
  Fail(e.code(), context + ": " + e.what());
}

void Aggregate(StrategyResult& s, const std::vector<std::size_t>& top_k) {
  auto collect = [&](auto getter) {
    std::vector<double> v;
    for (const auto& f : s.folds) v.push_back(getter(f));
    return Summarize(v);
  };
  s.aggregate["top1"] = collect([](const StrategyFoldResult& f) { return f.ensemble.top1; });
  for (std::size_t i = 0; i < top_k.size(); ++i) {
    s.aggregate["top" + std::to_string(top_k[i])] =
        collect([i](const StrategyFoldResult& f) { return f.ensemble.top_k[i]; });
  }
  s.aggregate["coverage_error"] =
      collect([](const StrategyFoldResult& f) { return f.ensemble.coverage_error; });
  if (s.folds.empty()) return;
  for (std::size_t m = 0; m < s.folds[0].members.size(); ++m) {
    auto& dst = s.member_aggregate[s.folds[0].members[m].learner];
    dst["top1"] = collect([m](const StrategyFoldResult& f) { return f.members[m].test.top1; });
    for (std::size_t i = 0; i < top_k.size(); ++i) {
      dst["top" + std::to_string(top_k[i])] =
          collect([m, i](const StrategyFoldResult& f) { return f.members[m].test.top_k[i]; });
    }
    dst["coverage_error"] =
        collect([m](const StrategyFoldResult& f) { return f.members[m].test.coverage_error; });
  }
}

json MetricsJson(const EvalMetrics& m, const std::vector<std::size_t>& top_k) {
  json j = {{"n", m.n}, {"top1", m.top1}, {"coverage_error", m.coverage_error}};
  for (std::size_t i = 0; i < top_k.size() && i < m.top_k.size(); ++i) {
    j["top" + std::to_string(top_k[i])] = m.top_k[i];
  }
  return j;
}

json SummaryJson(const std::map<std::string, MetricSummary>& s) {
  json j = json::object();
  for (const auto& [k, v] : s) j[k] = {{"mean", v.mean}, {"sd", v.sd}};
  return j;
}

json ClassMetricsJson(const ClassMetrics& m) {
  json forms = json::array();
  for (const auto& f : m.by_formation) {
    forms.push_back({{"formation", f.formation},
                     {"n_classes", f.n_classes},
                     {"macro_precision", f.macro_precision},
                     {"macro_recall", f.macro_recall},
                     {"macro_f1", f.macro_f1},
                     {"n_defined_f1", f.n_defined_f1}});
  }
  return {{"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"micro_recall", m.micro_recall},
          {"by_formation", forms}};
}

}  // namespace

const StrategyResult* CvReport::Find(std::string_view name) const {
  for (const auto& s : strategies) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

CvReport RunCv(const ExperimentConfig& config, const ExperimentData& data) {
  const ExperimentConfig cfg = Resolve(config, data);
  cfg.Validate();
  const Taxonomy& tax = data.taxonomy;
  const SampleTable& table = data.table;
  const std::size_t K = tax.num_leaves();

  CvReport report;
  report.config = cfg.ToJson();
  report.fold_mode = cfg.fold_mode == FoldMode::kSpatial ? "spatial" : "random";
  report.n_rows = table.rows();
  const BlockGrid grid = MakeGrid(cfg, table);
  report.block_size = grid.block_size;
  report.n_blocks = grid.BlockIds().size();
  const FoldPlan plan = MakeFolds(grid, table, K, cfg.n_folds, MixSeed(cfg.seed, "folds"));
  report.stratification_issues =
      CheckStratification(plan, table, K, cfg.stratification_tolerance).size();

  const auto strategies = PlanStrategies(cfg);
  std::vector<std::vector<int>> oof_flat(strategies.size(), std::vector<int>(table.rows(), kNoLabel));
  std::vector<std::vector<int>> oof_within = oof_flat;
  for (const auto& s : strategies) {
    StrategyResult r;
    r.name = StrategyName(s.scheme, s.mask);
    r.scheme = s.scheme;
    r.mask = s.mask;
    report.strategies.push_back(std::move(r));
  }

  for (int fold = 0; fold < cfg.n_folds; ++fold) {
    const auto start = std::chrono::steady_clock::now();
    const auto test_rows = plan.TestRows(fold);
    FoldData fd = MakeFoldData(cfg, data, grid, plan, fold, &report.leakage_checks);
    std::map<std::string, std::vector<MemberChoice>> tuned;
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      const auto& s = strategies[si];
      const std::string context =
          "fold " + std::to_string(fold) + ", strategy " + report.strategies[si].name;
      try {
        std::vector<MemberChoice> members;
        if (s.scheme == SchemeKind::kBiogeo) {
          members.push_back({"majority", LearnerConfig{}, 0.0});
        } else {
          const std::string key = s.mask.ToString();
          if (!tuned.count(key)) tuned[key] = TuneMembers(cfg, fd, s.mask);
          members = tuned[key];
        }
        FoldOutput out = EvaluateStrategyFold(cfg, fd, s.scheme, s.mask, members);
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
          oof_flat[si][test_rows[i]] = out.flat_pred[i];
          oof_within[si][test_rows[i]] = out.within_pred[i];
        }
        report.strategies[si].folds.push_back(std::move(out.result));
      } catch (const Error& e) {
        Rethrow(e, context);
      }
    }
    FoldInfo info;
    info.fold = fold;
    info.n_train = fd.train.rows();
    info.n_test = fd.test.rows();
    std::set<std::int64_t> blocks;
    for (std::size_t r : test_rows) blocks.insert(grid.block_of_row[r]);
    info.blocks = blocks.size();
    info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    info.peak_rss_kb = PeakRssKb();
    report.folds.push_back(info);
  }

  for (std::size_t si = 0; si < strategies.size(); ++si) {
    StrategyResult& s = report.strategies[si];
    Aggregate(s, cfg.top_k);
    s.flat = ClassPrf(oof_flat[si], table.leaf, K, &tax);
    s.within = ClassPrf(oof_within[si], table.leaf, K, &tax);
  }
  return report;
}

json CvReport::ToJson() const {
  std::vector<std::size_t> top_k;
  for (const auto& k : config.at("top_k")) top_k.push_back(k.get<std::size_t>());
  json j;
  j["format"] = "hdm-cv-report-1";
  j["config"] = config;
  json folds_json = json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test},
                          {"test_blocks", f.blocks}});
  }
  j["cv"] = {{"fold_mode", fold_mode},
             {"block_size", block_size},
             {"n_rows", n_rows},
             {"n_blocks", n_blocks},
             {"stratification_issues", stratification_issues},
             {"leakage_checks", leakage_checks},
             {"leakage_violations", 0},
             {"folds", folds_json}};
  json strat = json::array();
  for (const auto& s : strategies) {
    json sj;
    sj["name"] = s.name;
    sj["scheme"] = SchemeName(s.scheme);
    sj["mask"] = s.mask.ToString();
    sj["aggregate"] = SummaryJson(s.aggregate);
    json ma = json::object();
    for (const auto& [name, summary] : s.member_aggregate) ma[name] = SummaryJson(summary);
    sj["member_aggregate"] = ma;
    json fj = json::array();
    for (const auto& f : s.folds) {
      json members = json::array();
      for (const auto& m : f.members) {
        members.push_back({{"learner", m.learner},
                           {"config", m.config.ToJson()},
                           {"tune_score", m.tune_score},
                           {"holdout_score", m.holdout_score},
                           {"weight", m.weight},
                           {"test", MetricsJson(m.test, top_k)}});
      }
      fj.push_back({{"fold", f.fold},
                    {"n_train", f.n_train},
                    {"n_test", f.n_test},
                    {"n_inner", f.n_inner},
                    {"n_holdout", f.n_holdout},
                    {"flagged_rows", f.flagged_rows},
                    {"members", members},
                    {"ensemble", MetricsJson(f.ensemble, top_k)}});
    }
    sj["folds"] = fj;
    sj["class_metrics_flat"] = ClassMetricsJson(s.flat);
    sj["class_metrics_within"] = ClassMetricsJson(s.within);
    strat.push_back(std::move(sj));
  }
  j["strategies"] = strat;
  j["uncertainty_note"] =
      "ensemble uncertainty is reported as entropy and mean pairwise Jensen-Shannon divergence";
  return j;
}

json CvReport::TimingJson() const {
  json f = json::array();
  for (const auto& info : folds) {
    f.push_back({{"fold", info.fold}, {"seconds", info.seconds}, {"peak_rss_kb", info.peak_rss_kb}});
  }
  return {{"folds", f}};
}

void WriteCvOutputs(const CvReport& report, const Taxonomy& taxonomy, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  WriteText(root / "report.json", report.ToJson().dump(2) + "\n");
  WriteText(root / "timing.json", report.TimingJson().dump(2) + "\n");
  WriteClassScores((root / "class_metrics.csv").string(), ClassScoreRows(report, taxonomy));

  json manifests = json::array();
  for (const auto& s : report.strategies) {
    for (const auto& f : s.folds) {
      json m = json::array();
      for (const auto& mem : f.members) {
        m.push_back({{"name", mem.learner}, {"score", mem.holdout_score}, {"weight", mem.weight}});
      }
      manifests.push_back({{"strategy", s.name}, {"fold", f.fold}, {"members", m}});
    }
  }
  WriteText(root / "ensembles.json", manifests.dump(2) + "\n");

  std::ostringstream csv;
  csv << "strategy,fold,top1";
  std::vector<std::size_t> top_k;
  for (const auto& k : report.config.at("top_k")) {
    top_k.push_back(k.get<std::size_t>());
    csv << ",top" << top_k.back();
  }
  csv << ",coverage_error\n";
  for (const auto& s : report.strategies) {
    for (const auto& f : s.folds) {
      csv << CsvEscape(s.name) << ',' << f.fold << ',' << FormatDouble(f.ensemble.top1);
      for (double v : f.ensemble.top_k) csv << ',' << FormatDouble(v);
      csv << ',' << FormatDouble(f.ensemble.coverage_error) << '\n';
    }
    csv << CsvEscape(s.name) << ",mean," << FormatDouble(s.aggregate.at("top1").mean);
    for (std::size_t k : top_k) csv << ',' << FormatDouble(s.aggregate.at("top" + std::to_string(k)).mean);
    csv << ',' << FormatDouble(s.aggregate.at("coverage_error").mean) << '\n';
    csv << CsvEscape(s.name) << ",sd," << FormatDouble(s.aggregate.at("top1").sd);
    for (std::size_t k : top_k) csv << ',' << FormatDouble(s.aggregate.at("top" + std::to_string(k)).sd);
    csv << ',' << FormatDouble(s.aggregate.at("coverage_error").sd) << '\n';
  }
  WriteText(root / "ranking_metrics.csv", csv.str());
}

// ----- ablation -----

double AblationDeltaPercent(double ce_full, double ce_ablated) {
  if (!(ce_full > 0.0)) Fail(ErrorCode::kInvalidConfig, "full-model coverage error must be > 0");
  return (ce_ablated - ce_full) / ce_full * 100.0;
}

AblationReport RunAblation(const ExperimentConfig& config, const ExperimentData& data,
                           const CvReport& full) {
  const ExperimentConfig cfg = Resolve(config, data);
  const StrategyResult* base = nullptr;
  for (const auto& s : full.strategies) {
    if (s.scheme == SchemeKind::kMhdm) {
      base = &s;
      break;
    }
  }
  if (!base) Fail(ErrorCode::kInvalidConfig, "ablation needs an mhdm strategy in the full run");
  const ModalityMask present = PresentMask(data.table);
  std::vector<Modality> candidates;
  for (Modality m : base->mask.Members()) {
    if (present.Contains(m)) candidates.push_back(m);
  }
  if (candidates.size() < 2) {
    Fail(ErrorCode::kSingleModality, "mask " + base->mask.ToString() + " has nothing to ablate");
  }

  AblationReport rep;
  rep.strategy = base->name;
  rep.mask = base->mask;
  rep.ce_full = base->aggregate.at("coverage_error").mean;

  const BlockGrid grid = MakeGrid(cfg, data.table);
  const FoldPlan plan =
      MakeFolds(grid, data.table, data.taxonomy.num_leaves(), cfg.n_folds, MixSeed(cfg.seed, "folds"));
  std::vector<FoldData> folds;
  for (int f = 0; f < cfg.n_folds; ++f) folds.push_back(MakeFoldData(cfg, data, grid, plan, f, nullptr));

  for (Modality drop : candidates) {
    ModalityMask mask = base->mask;
    mask.Remove(drop);
    std::vector<double> ce;
    for (int f = 0; f < cfg.n_folds; ++f) {
      std::vector<MemberChoice> members;
      for (const auto& m : base->folds[static_cast<std::size_t>(f)].members) {
        LearnerConfig c = m.config;
        c.threads = cfg.threads;
        members.push_back({m.learner, c, m.tune_score});
      }
      try {
        ce.push_back(EvaluateStrategyFold(cfg, folds[static_cast<std::size_t>(f)], SchemeKind::kMhdm,
                                          mask, members)
                         .result.ensemble.coverage_error);
      } catch (const Error& e) {
        Rethrow(e, "ablation of " + std::string(ModalityName(drop)) + ", fold " + std::to_string(f));
      }
    }
    AblationRow row;
    row.modality = drop;
    row.ce_ablated = Summarize(ce).mean;
    row.delta_percent = AblationDeltaPercent(rep.ce_full, row.ce_ablated);
    rep.rows.push_back(row);
  }
  return rep;
}

json AblationReport::ToJson() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"removed", ModalityLabel(r.modality)},
                         {"coverage_error", r.ce_ablated},
                         {"delta_percent", r.delta_percent}});
  }
  return {{"strategy", strategy}, {"mask", mask.ToString()}, {"coverage_error_full", ce_full},
          {"variants", rows_json}};
}

std::string AblationReport::Csv() const {
  std::ostringstream out;
  out << "removed,coverage_error,coverage_error_full,delta_percent\n";
  for (const auto& r : rows) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%+.1f%%", r.delta_percent);
    out << ModalityLabel(r.modality) << ',' << FormatDouble(r.ce_ablated) << ','
        << FormatDouble(ce_full) << ',' << pct << '\n';
  }
  return out.str();
}

}  // namespace hdm
