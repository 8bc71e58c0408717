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
#include <utility>
#include <vector>

#include "hdm/common.h"

namespace hdm {

// ----- special functions -----

double RegularizedGammaP(double a, double x);
double RegularizedGammaQ(double a, double x);
// I_x(a, b).
double RegularizedBeta(double a, double b, double x);
// P(X > x) for chi-square with df degrees of freedom.
double ChiSquareSurvival(double x, double df);
// P(|T| > |t|) for Student t.
double StudentTwoSided(double t, double df);

// 1-based ranks, ties averaged. `descending`: the largest value gets rank 1.
std::vector<double> AverageRanks(std::span<const double> values, bool descending);

// ----- strategy comparison -----

// Blocks (classes) by treatments (strategies).
struct ScoreMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix scores;
  std::size_t dropped_rows = 0;

  // Drops rows holding a NaN and counts them. Throws kDegenerateMatrix when
  // fewer than 2 rows or 2 columns remain.
  static ScoreMatrix Build(std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                           const Matrix& scores);
};

struct FriedmanResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  std::vector<double> mean_ranks;  // rank 1 = highest score
  std::size_t n = 0;
};

FriedmanResult Friedman(const ScoreMatrix& m);

// Critical values of the studentized range divided by sqrt(2), k = 2..10,
// alpha 0.05 or 0.10. Throws kUnsupportedK.
double NemenyiQ(std::size_t k, double alpha);

struct NemenyiResult {
  double q = 0.0;
  double cd = 0.0;
  std::vector<double> mean_ranks;
  std::vector<std::pair<std::size_t, std::size_t>> significant_pairs;  // i < j

  bool Significant(std::size_t i, std::size_t j) const;
};

NemenyiResult Nemenyi(const ScoreMatrix& m, double alpha);

struct PairedTResult {
  double t = 0.0;
  int df = 0;
  double p = 1.0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
};

// Two-sided paired t-test on a - b. Throws kDegeneratePairs when all
// differences are zero or fewer than 2 pairs remain.
PairedTResult PairedT(std::span<const double> a, std::span<const double> b);

}  // namespace hdm
