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

// hdm: command-line driver for the habitat distribution modelling harness.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "hdm/experiment.h"

namespace {

using hdm::ErrorCode;
using hdm::Fail;
using nlohmann::json;

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, path + ": " + e.what());
  }
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string Require(const std::string& value, const std::string& what) {
  if (value.empty()) Fail(ErrorCode::kInvalidConfig, "missing " + what);
  return value;
}

hdm::ExperimentConfig LoadExperiment(const std::string& path, int threads,
                                     const std::string& out_dir) {
  auto cfg = hdm::ExperimentConfig::Load(Require(path, "--config"));
  if (threads > 0) cfg.threads = threads;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  return cfg;
}

std::string OutputDir(const hdm::ExperimentConfig& cfg) {
  return cfg.output_dir.empty() ? std::string("hdm_out") : cfg.output_dir;
}

// ----- subcommands -----

void RunSynth(const std::string& config, const std::string& out, const std::string& tax_out) {
  const auto spec = hdm::SyntheticSpec::FromJson(ReadJson(Require(config, "--config")));
  spec.Validate();
  const auto [table, taxonomy] = hdm::GenerateSynthetic(spec);
  hdm::WriteDataset(Require(out, "--out"), table, taxonomy);
  if (!tax_out.empty()) WriteFile(tax_out, taxonomy.ToJson().dump(2) + "\n");
  std::printf("wrote %zu rows, %zu leaves, %zu formations\n", table.rows(), taxonomy.num_leaves(),
              taxonomy.num_formations());
}

void RunCvCommand(const hdm::ExperimentConfig& cfg) {
  const auto data = hdm::LoadExperimentData(cfg);
  const auto report = hdm::RunCv(cfg, data);
  const std::string dir = OutputDir(cfg);
  hdm::WriteCvOutputs(report, data.taxonomy, dir);
  for (const auto& s : report.strategies) {
    std::printf("%-24s top1 %.4f  coverage %.3f +- %.3f\n", s.name.c_str(),
                s.aggregate.at("top1").mean, s.aggregate.at("coverage_error").mean,
                s.aggregate.at("coverage_error").sd);
  }
  std::printf("outputs in %s\n", dir.c_str());
}

void RunFit(const hdm::ExperimentConfig& cfg, const std::string& scheme, const std::string& mask,
            const std::string& out) {
  const auto data = hdm::LoadExperimentData(cfg);
  const hdm::SchemeKind kind = hdm::ParseScheme(scheme);
  const hdm::ModalityMask m = !mask.empty()       ? hdm::ModalityMask::Parse(mask)
                              : cfg.masks.empty() ? data.table.schema.PresentModalities()
                                                  : cfg.masks.front();
  hdm::LearnerConfig learner = cfg.learners.empty()
                                   ? hdm::SearchSpace::Default(hdm::Family::kForest).base
                                   : cfg.learners.front().space.base;
  learner.threads = cfg.threads;
  const auto model = hdm::TrainStrategy(kind, data.table, data.taxonomy, m, learner, cfg.seed);
  WriteFile(Require(out, "--out"), model.ToJson().dump() + "\n");
  std::printf("fitted %s on %zu rows\n", hdm::StrategyName(kind, m).c_str(), data.table.rows());
}

void RunPredict(const std::string& model_path, const std::string& data_path,
                const std::string& out, int threads) {
  const auto model = hdm::StrategyModel::FromJson(ReadJson(Require(model_path, "--model")));
  hdm::LoadOptions opts;
  opts.bioregion_levels = model.bioregion_levels;
  const auto table = hdm::LoadDataset(Require(data_path, "--data"), model.taxonomy, opts);
  const auto probs = hdm::PredictJoint(model, table, threads);
  const auto top = probs.Argmax();
  std::ostringstream csv;
  csv << "plot_id,predicted,flagged";
  for (const auto& c : probs.classes) csv << ",p_" << hdm::CsvEscape(c);
  csv << '\n';
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    csv << hdm::CsvEscape(table.row_ids[r]) << ','
        << hdm::CsvEscape(probs.classes[static_cast<std::size_t>(top[r])]) << ','
        << (probs.flagged_rows[r] ? 1 : 0);
    for (double v : probs.p.row(r)) csv << ',' << hdm::FormatDouble(v);
    csv << '\n';
  }
  WriteFile(Require(out, "--out"), csv.str());
  std::printf("predicted %zu rows\n", probs.rows());
}

void RunAblate(hdm::ExperimentConfig cfg) {
  const auto data = hdm::LoadExperimentData(cfg);
  cfg.schemes = {hdm::SchemeKind::kMhdm};
  if (cfg.masks.size() > 1) cfg.masks.resize(1);
  const auto full = hdm::RunCv(cfg, data);
  const auto ablation = hdm::RunAblation(cfg, data, full);
  const std::filesystem::path dir(OutputDir(cfg));
  json j = ablation.ToJson();
  j["config"] = full.config;
  WriteFile(dir / "ablation.json", j.dump(2) + "\n");
  WriteFile(dir / "ablation.csv", ablation.Csv());
  std::printf("%s", ablation.Csv().c_str());
}

void RunCompare(std::vector<std::string> inputs, std::string metric, double alpha,
                std::vector<std::string> only, std::string out, const std::string& config) {
  if (!config.empty()) {
    const json j = ReadJson(config);
    if (inputs.empty()) inputs = j.value("inputs", inputs);
    metric = j.value("metric", metric);
    alpha = j.value("alpha", alpha);
    if (only.empty()) only = j.value("strategies", only);
    if (out.empty()) out = j.value("output_dir", out);
  }
  if (inputs.empty()) Fail(ErrorCode::kInvalidConfig, "compare needs at least one input CSV");
  // A strategy name seen in several files is qualified by the file stem.
  std::vector<std::vector<hdm::ClassScoreRow>> per_file;
  std::map<std::string, std::set<std::size_t>> files_of;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    per_file.push_back(hdm::ReadClassScores(inputs[i]));
    for (const auto& r : per_file.back()) files_of[r.strategy].insert(i);
  }
  std::vector<hdm::ClassScoreRow> rows;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string stem = std::filesystem::path(inputs[i]).stem().string();
    for (auto r : per_file[i]) {
      if (files_of[r.strategy].size() > 1) r.strategy = stem + ":" + r.strategy;
      rows.push_back(std::move(r));
    }
  }
  if (!only.empty()) {
    const std::set<std::string> keep(only.begin(), only.end());
    std::erase_if(rows, [&](const hdm::ClassScoreRow& r) { return !keep.count(r.strategy); });
  }
  const auto rep = hdm::CompareStrategies(rows, metric, alpha);
  const std::filesystem::path dir(out.empty() ? std::string("hdm_compare") : out);
  WriteFile(dir / "comparison.json", rep.ToJson().dump(2) + "\n");
  WriteFile(dir / "comparison.csv", rep.TableCsv());
  for (const auto& f : rep.formations) {
    std::printf("%-8s", f.formation.c_str());
    if (!f.tested) {
      std::printf(" untested (%zu complete classes)\n", f.n_classes - f.dropped);
    } else if (f.best >= 0) {
      std::printf(" p=%.4g best=%s\n", f.friedman.p,
                  rep.strategies[static_cast<std::size_t>(f.best)].c_str());
    } else {
      std::printf(" p=%.4g no significant difference\n", f.friedman.p);
    }
  }
}

void RunAttribute(const hdm::ExperimentConfig& cfg) {
  const auto data = hdm::LoadExperimentData(cfg);
  const auto rep = hdm::RunAttribution(cfg, data);
  const std::filesystem::path dir(OutputDir(cfg));
  json j = rep.ToJson();
  j["config"] = cfg.ToJson();
  WriteFile(dir / "attribution.json", j.dump(2) + "\n");
  WriteFile(dir / "attribution.csv", rep.Csv());
  std::printf("%s", rep.Csv().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Habitat distribution modelling harness"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: HDM_THREADS or all cores)");

  std::string config, out, tax_out, scheme = "mhdm", mask, model, data, metric = "f1";
  double alpha = 0.05;
  std::vector<std::string> inputs, only;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--config", config, "SyntheticSpec JSON");
  synth->add_option("--out", out, "Output CSV");
  synth->add_option("--taxonomy-out", tax_out, "Output taxonomy JSON");

  auto* cv = app.add_subcommand("cv", "Spatial block cross-validation of every strategy");
  cv->add_option("--config", config, "Experiment JSON");
  cv->add_option("--out", out, "Output directory (overrides output_dir)");

  auto* fit = app.add_subcommand("fit", "Fit one strategy on all rows");
  fit->add_option("--config", config, "Experiment JSON");
  fit->add_option("--scheme", scheme, "mhdm, hhdm or biogeo");
  fit->add_option("--mask", mask, "Modality mask, e.g. ARM or abio,rsbio");
  fit->add_option("--out", out, "Output model JSON");

  auto* predict = app.add_subcommand("predict", "Predict leaf probabilities");
  predict->add_option("--config", config, "JSON with model, data, out");
  predict->add_option("--model", model, "Model JSON from fit");
  predict->add_option("--data", data, "Dataset CSV");
  predict->add_option("--out", out, "Output CSV");

  auto* ablate = app.add_subcommand("ablate", "Drop one modality at a time");
  ablate->add_option("--config", config, "Experiment JSON");
  ablate->add_option("--out", out, "Output directory");

  auto* compare = app.add_subcommand("compare", "Friedman and Nemenyi over class-wise scores");
  compare->add_option("--config", config, "JSON with inputs, metric, alpha, strategies, output_dir");
  compare->add_option("inputs", inputs, "class_metrics.csv files");
  compare->add_option("--metric", metric, "f1, precision or recall");
  compare->add_option("--alpha", alpha, "0.05 or 0.10");
  compare->add_option("--strategies", only, "Restrict to these strategy names");
  compare->add_option("--out", out, "Output directory");

  auto* attribute = app.add_subcommand("attribute", "Modality shares of sampled Shapley values");
  attribute->add_option("--config", config, "Experiment JSON");
  attribute->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      RunSynth(config, out, tax_out);
    } else if (cv->parsed()) {
      RunCvCommand(LoadExperiment(config, threads, out));
    } else if (fit->parsed()) {
      RunFit(LoadExperiment(config, threads, ""), scheme, mask, out);
    } else if (predict->parsed()) {
      if (!config.empty()) {
        const json j = ReadJson(config);
        if (model.empty()) model = j.value("model", model);
        if (data.empty()) data = j.value("data", data);
        if (out.empty()) out = j.value("out", out);
      }
      RunPredict(model, data, out, threads);
    } else if (ablate->parsed()) {
      RunAblate(LoadExperiment(config, threads, out));
    } else if (compare->parsed()) {
      RunCompare(inputs, metric, alpha, only, out, config);
    } else if (attribute->parsed()) {
      RunAttribute(LoadExperiment(config, threads, out));
    }
  } catch (const hdm::Error& e) {
    std::fprintf(stderr, "hdm: %s: %s\n", std::string(hdm::ErrorCodeName(e.code())).c_str(),
                 e.what());
    return hdm::IsValidationError(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hdm: %s\n", e.what());
    return 2;
  }
  return 0;
}
