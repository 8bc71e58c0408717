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

#include "hdm/metrics.h"

#include <cmath>
#include <limits>

#include "hdm/dataset.h"
#include "hdm/kernels.h"

namespace hdm {

namespace {

void CheckTruth(const Matrix& probs, std::span<const int> truth) {
  if (truth.size() != probs.rows()) Fail(ErrorCode::kShapeMismatch, "truth length != rows");
  for (int t : truth) {
    if (t < 0 || static_cast<std::size_t>(t) >= probs.cols()) {
      Fail(ErrorCode::kUnknownLabel, "truth index " + std::to_string(t) + " out of range");
    }
  }
}

std::vector<std::size_t> Ranks(const Matrix& probs, std::span<const int> truth, int threads) {
  return threads > 1 ? kernels::omp::TruthRanks(probs, truth, threads)
                     : kernels::serial::TruthRanks(probs, truth);
}

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double TopKAccuracy(const Matrix& probs, std::span<const int> truth, std::size_t k, int threads) {
  if (k < 1 || k > probs.cols()) {
    Fail(ErrorCode::kBadK, "k=" + std::to_string(k) + " with " + std::to_string(probs.cols()) +
                               " classes");
  }
  CheckTruth(probs, truth);
  if (probs.rows() == 0) return 0.0;
  const auto ranks = Ranks(probs, truth, threads);
  std::size_t hits = 0;
  for (std::size_t r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double CoverageError(const Matrix& probs, std::span<const int> truth, int threads) {
  CheckTruth(probs, truth);
  if (probs.rows() == 0) return 0.0;
  const auto ranks = Ranks(probs, truth, threads);
  std::size_t total = 0;
  for (std::size_t r : ranks) total += r;
  return static_cast<double>(total) / static_cast<double>(ranks.size());
}

ClassMetrics ClassPrf(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes,
                      const Taxonomy* taxonomy) {
  if (pred.size() != truth.size()) Fail(ErrorCode::kShapeMismatch, "pred and truth lengths differ");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ClassMetrics m;
  m.support.assign(num_classes, 0);
  m.predicted.assign(num_classes, 0);
  m.true_positive.assign(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == kNoLabel) continue;
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(pred[i]);
    if (t >= num_classes || p >= num_classes) Fail(ErrorCode::kUnknownLabel, "label out of range");
    ++m.support[t];
    ++m.predicted[p];
    if (t == p) ++m.true_positive[t];
  }
  m.precision.assign(num_classes, nan);
  m.recall.assign(num_classes, nan);
  m.f1.assign(num_classes, nan);
  std::size_t tp_total = 0, support_total = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double tp = static_cast<double>(m.true_positive[c]);
    if (m.predicted[c] > 0) m.precision[c] = tp / static_cast<double>(m.predicted[c]);
    if (m.support[c] > 0) {
      m.recall[c] = tp / static_cast<double>(m.support[c]);
      m.f1[c] = 2.0 * tp / static_cast<double>(m.predicted[c] + m.support[c]);
    }
    tp_total += m.true_positive[c];
    support_total += m.support[c];
  }
  m.macro_precision = MeanOf(m.precision);
  m.macro_recall = MeanOf(m.recall);
  m.macro_f1 = MeanOf(m.f1);
  m.micro_recall = support_total ? static_cast<double>(tp_total) / static_cast<double>(support_total)
                                 : nan;

  if (taxonomy && taxonomy->num_leaves() == num_classes) {
    for (std::size_t f = 0; f < taxonomy->num_formations(); ++f) {
      FormationSummary s;
      s.formation = taxonomy->formations()[f];
      std::vector<double> p, r, f1;
      for (std::size_t c : taxonomy->leaves_of(f)) {
        ++s.n_classes;
        p.push_back(m.precision[c]);
        r.push_back(m.recall[c]);
        f1.push_back(m.f1[c]);
        if (m.f1_defined(c)) ++s.n_defined_f1;
      }
      s.macro_precision = MeanOf(p);
      s.macro_recall = MeanOf(r);
      s.macro_f1 = MeanOf(f1);
      m.by_formation.push_back(s);
    }
  }
  return m;
}

double MacroF1(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes) {
  const double v = ClassPrf(pred, truth, num_classes).macro_f1;
  return std::isnan(v) ? 0.0 : v;
}

}  // namespace hdm
