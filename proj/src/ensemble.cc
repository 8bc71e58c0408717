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

#include <algorithm>
#include <cmath>

#include "hdm/kernels.h"

namespace hdm {

std::vector<double> WeightsFromScores(std::span<const double> scores, double floor) {
  if (scores.empty()) Fail(ErrorCode::kEmptyEnsemble, "no members");
  if (!(floor >= 0.0)) Fail(ErrorCode::kInvalidConfig, "weight floor must be >= 0");
  std::vector<double> w;
  double total = 0.0;
  for (double s : scores) {
    const double v = std::isnan(s) ? floor : std::max(s, floor);
    w.push_back(v);
    total += v;
  }
  if (total <= 0.0) {
    // All scores at a zero floor: fall back to equal weights.
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (double& v : w) v /= total;
  return w;
}

ProbabilityTable Combine(std::span<const ProbabilityTable> members, std::span<const double> weights,
                         int threads) {
  if (members.empty()) Fail(ErrorCode::kEmptyEnsemble, "no members");
  for (const auto& m : members) {
    if (m.classes != members[0].classes) Fail(ErrorCode::kShapeMismatch, "class lists differ");
  }
  std::vector<const Matrix*> mats;
  for (const auto& m : members) mats.push_back(&m.p);
  ProbabilityTable out(members[0].classes, 0);
  out.p = threads > 1 ? kernels::omp::WeightedCombine(mats, weights, threads)
                      : kernels::serial::WeightedCombine(mats, weights);
  out.flagged_rows.assign(out.p.rows(), false);
  for (const auto& m : members) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      if (m.flagged_rows.size() == out.rows() && m.flagged_rows[r]) out.flagged_rows[r] = true;
    }
  }
  for (std::size_t c = 0; c < out.cols(); ++c) {
    out.unseen_classes[c] = std::all_of(members.begin(), members.end(), [c](const auto& m) {
      return m.unseen_classes.size() > c && m.unseen_classes[c];
    });
  }
  return out;
}

double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

double JensenShannon(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) d += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) d += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::clamp(d, 0.0, std::log(2.0));
}

std::vector<RowUncertainty> Uncertainty(const ProbabilityTable& combined,
                                        std::span<const ProbabilityTable> members) {
  std::vector<RowUncertainty> out(combined.rows());
  for (std::size_t r = 0; r < combined.rows(); ++r) {
    out[r].entropy = Entropy(combined.p.row(r));
    if (members.size() < 2) continue;
    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        s += JensenShannon(members[a].p.row(r), members[b].p.row(r));
        ++pairs;
      }
    }
    out[r].disagreement = s / static_cast<double>(pairs);
  }
  return out;
}

void EnsembleManifest::AssignWeights() {
  std::vector<double> scores;
  for (const auto& m : members) scores.push_back(m.score);
  const auto w = WeightsFromScores(scores, floor);
  for (std::size_t i = 0; i < members.size(); ++i) members[i].weight = w[i];
}

nlohmann::json EnsembleManifest::ToJson() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& m : members) {
    list.push_back({{"name", m.name}, {"path", m.path}, {"score", m.score}, {"weight", m.weight}});
  }
  return {{"weight_floor", floor}, {"members", list}};
}

EnsembleManifest EnsembleManifest::FromJson(const nlohmann::json& j) {
  EnsembleManifest e;
  try {
    e.floor = j.value("weight_floor", kDefaultWeightFloor);
    for (const auto& m : j.at("members")) {
      e.members.push_back({m.value("name", std::string()), m.value("path", std::string()),
                           m.at("score").get<double>(), m.value("weight", 0.0)});
    }
  } catch (const nlohmann::json::exception& ex) {
    Fail(ErrorCode::kSchemaError, std::string("ensemble manifest: ") + ex.what());
  }
  if (e.members.empty()) Fail(ErrorCode::kEmptyEnsemble, "manifest lists no members");
  return e;
}

}  // namespace hdm
