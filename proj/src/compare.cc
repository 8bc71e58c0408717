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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "hdm/experiment.h"

namespace hdm {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string Num(double v) { return std::isnan(v) ? "NA" : FormatDouble(v); }

double ParseNum(const std::string& s, const std::string& path) {
  if (s.empty() || s == "NA" || s == "nan" || s == "NaN") return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  Fail(ErrorCode::kSchemaError, path + ": '" + s + "' is not a number");
}

void AppendRows(std::vector<ClassScoreRow>& out, const std::string& name, const ClassMetrics& m,
                const Taxonomy& tax) {
  for (std::size_t c = 0; c < tax.num_leaves(); ++c) {
    ClassScoreRow r;
    r.strategy = name;
    r.formation = tax.formations()[tax.formation_of(c)];
    r.leaf = tax.leaves()[c];
    r.precision = m.precision[c];
    r.recall = m.recall[c];
    r.f1 = m.f1[c];
    r.support = m.support[c];
    out.push_back(std::move(r));
  }
}

double Pick(const ClassScoreRow& r, const std::string& metric) {
  if (metric == "f1") return r.f1;
  if (metric == "precision") return r.precision;
  return r.recall;
}

}  // namespace

std::vector<ClassScoreRow> ClassScoreRows(const CvReport& report, const Taxonomy& taxonomy) {
  std::vector<ClassScoreRow> out;
  for (const auto& s : report.strategies) {
    // hhdm is scored in its own context: within the true formation.
    AppendRows(out, s.name, s.scheme == SchemeKind::kHhdm ? s.within : s.flat, taxonomy);
    if (s.scheme == SchemeKind::kMhdm) AppendRows(out, s.name + " (nested)", s.within, taxonomy);
  }
  return out;
}

void WriteClassScores(const std::string& path, const std::vector<ClassScoreRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << "strategy,formation,class,precision,recall,f1,support\n";
  for (const auto& r : rows) {
    out << CsvEscape(r.strategy) << ',' << CsvEscape(r.formation) << ',' << CsvEscape(r.leaf) << ','
        << Num(r.precision) << ',' << Num(r.recall) << ',' << Num(r.f1) << ',' << r.support << '\n';
  }
}

std::vector<ClassScoreRow> ReadClassScores(const std::string& path) {
  const auto csv = ReadCsv(path);
  if (csv.empty()) Fail(ErrorCode::kSchemaError, path + " has no header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < csv[0].size(); ++i) col[csv[0][i]] = i;
  for (const char* need : {"strategy", "formation", "class", "precision", "recall", "f1"}) {
    if (!col.count(need)) {
      Fail(ErrorCode::kSchemaError, path + " lacks column '" + std::string(need) + "'");
    }
  }
  std::vector<ClassScoreRow> rows;
  for (std::size_t i = 1; i < csv.size(); ++i) {
    const auto& line = csv[i];
    if (line.size() == 1 && line[0].empty()) continue;
    if (line.size() != csv[0].size()) {
      Fail(ErrorCode::kSchemaError, path + ": row " + std::to_string(i) + " has wrong width");
    }
    ClassScoreRow r;
    r.strategy = line[col["strategy"]];
    r.formation = line[col["formation"]];
    r.leaf = line[col["class"]];
    r.precision = ParseNum(line[col["precision"]], path);
    r.recall = ParseNum(line[col["recall"]], path);
    r.f1 = ParseNum(line[col["f1"]], path);
    if (col.count("support")) r.support = static_cast<std::size_t>(ParseNum(line[col["support"]], path));
    rows.push_back(std::move(r));
  }
  return rows;
}

ComparisonReport CompareStrategies(const std::vector<ClassScoreRow>& rows, const std::string& metric,
                                   double alpha) {
  if (metric != "f1" && metric != "precision" && metric != "recall") {
    Fail(ErrorCode::kInvalidConfig, "metric must be f1, precision or recall");
  }
  ComparisonReport rep;
  rep.metric = metric;
  rep.alpha = alpha;
  // strategy -> (formation, class) -> score
  std::map<std::string, std::map<std::pair<std::string, std::string>, double>> table;
  for (const auto& r : rows) {
    if (!table.count(r.strategy)) rep.strategies.push_back(r.strategy);
    if (!table[r.strategy].emplace(std::make_pair(r.formation, r.leaf), Pick(r, metric)).second) {
      Fail(ErrorCode::kSchemaError, "duplicate class '" + r.leaf + "' for " + r.strategy);
    }
  }
  const std::size_t k = rep.strategies.size();
  if (k < 2) Fail(ErrorCode::kDegenerateMatrix, "need at least 2 strategies, have " + std::to_string(k));
  const auto& ref = table[rep.strategies[0]];
  for (const auto& s : rep.strategies) {
    const auto& other = table[s];
    const bool same = other.size() == ref.size() &&
                      std::equal(other.begin(), other.end(), ref.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) {
      Fail(ErrorCode::kMismatchedFolds,
           "'" + s + "' and '" + rep.strategies[0] + "' cover different classes");
    }
  }

  std::vector<std::string> formations;
  for (const auto& [key, v] : ref) {
    if (formations.empty() || formations.back() != key.first) formations.push_back(key.first);
  }
  formations.push_back("ALL");

  for (const auto& f : formations) {
    FormationComparison fc;
    fc.formation = f;
    std::vector<std::string> labels;
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& [key, v] : ref) {
      if (f == "ALL" || key.first == f) {
        keys.push_back(key);
        labels.push_back(key.second);
      }
    }
    fc.n_classes = keys.size();
    Matrix scores(keys.size(), k);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      for (std::size_t j = 0; j < k; ++j) scores(i, j) = table[rep.strategies[j]][keys[i]];
    }
    fc.mean_score.assign(k, kNaN);
    std::size_t complete = 0;
    std::vector<double> sums(k, 0.0);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto row = scores.row(i);
      if (std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) continue;
      ++complete;
      for (std::size_t j = 0; j < k; ++j) sums[j] += row[j];
    }
    fc.dropped = keys.size() - complete;
    if (complete > 0) {
      for (std::size_t j = 0; j < k; ++j) fc.mean_score[j] = sums[j] / static_cast<double>(complete);
    }
    fc.equivalent.assign(k, false);
    if (complete >= 2) {
      const ScoreMatrix m = ScoreMatrix::Build(labels, rep.strategies, scores);
      fc.tested = true;
      fc.friedman = Friedman(m);
      fc.significant = fc.friedman.p < alpha;
      if (fc.significant) {
        fc.nemenyi = Nemenyi(m, alpha);
        const auto& ranks = fc.friedman.mean_ranks;
        fc.best = static_cast<int>(std::min_element(ranks.begin(), ranks.end()) - ranks.begin());
        for (std::size_t j = 0; j < k; ++j) {
          fc.equivalent[j] = !fc.nemenyi->Significant(static_cast<std::size_t>(fc.best), j);
        }
      }
    }
    rep.formations.push_back(std::move(fc));
  }
  return rep;
}

json ComparisonReport::ToJson() const {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json forms = json::array();
  for (const auto& f : formations) {
    json j = {{"formation", f.formation},
              {"n_classes", f.n_classes},
              {"dropped_classes", f.dropped},
              {"tested", f.tested}};
    json means = json::object();
    for (std::size_t s = 0; s < strategies.size(); ++s) means[strategies[s]] = num(f.mean_score[s]);
    j["mean_" + metric] = means;
    if (f.tested) {
      json ranks = json::object();
      for (std::size_t s = 0; s < strategies.size(); ++s) ranks[strategies[s]] = f.friedman.mean_ranks[s];
      j["friedman"] = {{"chi2", f.friedman.chi2},
                       {"df", f.friedman.df},
                       {"p", f.friedman.p},
                       {"n", f.friedman.n},
                       {"mean_ranks", ranks}};
      j["significant"] = f.significant;
    }
    if (f.nemenyi) {
      json pairs = json::array();
      for (const auto& [a, b] : f.nemenyi->significant_pairs) {
        pairs.push_back({strategies[a], strategies[b]});
      }
      j["nemenyi"] = {{"q", f.nemenyi->q}, {"critical_difference", f.nemenyi->cd},
                      {"significant_pairs", pairs}};
      j["best"] = strategies[static_cast<std::size_t>(f.best)];
      json eq = json::array();
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        if (f.equivalent[s]) eq.push_back(strategies[s]);
      }
      j["equivalent"] = eq;
    } else {
      j["best"] = nullptr;
    }
    forms.push_back(std::move(j));
  }
  return {{"metric", metric}, {"alpha", alpha}, {"strategies", strategies}, {"formations", forms}};
}

std::string ComparisonReport::TableCsv() const {
  std::ostringstream out;
  out << "formation,strategy,mean_" << metric << ",mean_rank,friedman_p,best,equivalent\n";
  for (const auto& f : formations) {
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      out << CsvEscape(f.formation) << ',' << CsvEscape(strategies[s]) << ','
          << Num(f.mean_score[s]) << ',';
      if (f.tested) {
        out << FormatDouble(f.friedman.mean_ranks[s]) << ',' << FormatDouble(f.friedman.p);
      } else {
        out << "NA,NA";
      }
      out << ',' << (f.best == static_cast<int>(s) ? "*" : "") << ','
          << (f.nemenyi && f.equivalent[s] ? "yes" : "") << '\n';
    }
  }
  return out.str();
}

}  // namespace hdm
