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

#include <span>
#include <string>
#include <vector>

#include "hdm/probability.h"
#include "hdm/taxonomy.h"

namespace hdm {

// Fraction of rows whose true class ranks within the top k. Among equal
// probabilities the lower class index ranks first. Throws kBadK.
double TopKAccuracy(const Matrix& probs, std::span<const int> truth, std::size_t k,
                    int threads = 1);

// Mean 1-based rank of the true class under the same tie rule.
double CoverageError(const Matrix& probs, std::span<const int> truth, int threads = 1);

struct FormationSummary {
  std::string formation;
  std::size_t n_classes = 0;  // leaves of the formation
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t n_defined_f1 = 0;
};

// One-vs-rest scores per class. Precision is undefined when the class was
// never predicted; recall and F1 are undefined when it has no support.
// Undefined entries are NaN and excluded from macro averages.
struct ClassMetrics {
  std::vector<double> precision, recall, f1;
  std::vector<std::size_t> support, predicted, true_positive;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_recall = 0.0;
  std::vector<FormationSummary> by_formation;

  bool precision_defined(std::size_t c) const { return predicted[c] > 0; }
  bool recall_defined(std::size_t c) const { return support[c] > 0; }
  bool f1_defined(std::size_t c) const { return support[c] > 0; }
};

// Labels are class indices in [0, K); entries equal to kNoLabel in `truth`
// are skipped. With a taxonomy (K == num_leaves) the per-formation summary
// is filled as well.
ClassMetrics ClassPrf(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes,
                      const Taxonomy* taxonomy = nullptr);

// Macro F1 as used for tuning and ensemble weights.
double MacroF1(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes);

}  // namespace hdm
