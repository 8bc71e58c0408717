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

#include "hdm/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hdm {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

double GammaSeries(double a, double x) {
  double sum = 1.0 / a, term = sum, ap = a;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz evaluation of the continued fraction for Q(a, x).
double GammaFraction(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double BetaFraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double RegularizedGammaP(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? GammaSeries(a, x) : 1.0 - GammaFraction(a, x);
}

double RegularizedGammaQ(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - GammaSeries(a, x) : GammaFraction(a, x);
}

double RegularizedBeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaFraction(a, b, x) / a;
  return 1.0 - front * BetaFraction(b, a, 1.0 - x) / b;
}

double ChiSquareSurvival(double x, double df) { return RegularizedGammaQ(df / 2.0, x / 2.0); }

double StudentTwoSided(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return RegularizedBeta(df / 2.0, 0.5, df / (df + t * t));
}

std::vector<double> AverageRanks(std::span<const double> values, bool descending) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

ScoreMatrix ScoreMatrix::Build(std::vector<std::string> row_labels,
                               std::vector<std::string> col_labels, const Matrix& scores) {
  if (row_labels.size() != scores.rows() || col_labels.size() != scores.cols()) {
    Fail(ErrorCode::kShapeMismatch, "labels do not match the score matrix");
  }
  ScoreMatrix m;
  m.col_labels = std::move(col_labels);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    if (std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
      ++m.dropped_rows;
    } else {
      keep.push_back(r);
      m.row_labels.push_back(row_labels[r]);
    }
  }
  m.scores = scores.SelectRows(keep);
  if (m.scores.rows() < 2 || m.col_labels.size() < 2) {
    Fail(ErrorCode::kDegenerateMatrix, "need at least 2 complete rows and 2 columns, have " +
                                           std::to_string(m.scores.rows()) + " x " +
                                           std::to_string(m.col_labels.size()));
  }
  return m;
}

FriedmanResult Friedman(const ScoreMatrix& m) {
  const std::size_t n = m.scores.rows(), k = m.scores.cols();
  if (n < 2 || k < 2) Fail(ErrorCode::kDegenerateMatrix, "need n >= 2 and k >= 2");
  FriedmanResult res;
  res.n = n;
  res.mean_ranks.assign(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto ranks = AverageRanks(m.scores.row(r), /*descending=*/true);
    for (std::size_t j = 0; j < k; ++j) res.mean_ranks[j] += ranks[j];
  }
  double sq = 0.0;
  for (double& v : res.mean_ranks) {
    v /= static_cast<double>(n);
    sq += v * v;
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  res.chi2 = std::max(0.0, 12.0 * nd / (kd * (kd + 1.0)) * sq - 3.0 * nd * (kd + 1.0));
  // Rounding noise on an exact zero.
  if (res.chi2 < 1e-9) res.chi2 = 0.0;
  res.df = static_cast<int>(k) - 1;
  res.p = ChiSquareSurvival(res.chi2, res.df);
  return res;
}

double NemenyiQ(std::size_t k, double alpha) {
  static constexpr double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10) {
    Fail(ErrorCode::kUnsupportedK, "Nemenyi table covers k = 2..10, got " + std::to_string(k));
  }
  if (std::abs(alpha - 0.05) < 1e-12) return q05[k - 2];
  if (std::abs(alpha - 0.10) < 1e-12) return q10[k - 2];
  Fail(ErrorCode::kUnsupportedK, "alpha must be 0.05 or 0.10");
}

bool NemenyiResult::Significant(std::size_t i, std::size_t j) const {
  const auto key = std::minmax(i, j);
  return std::find(significant_pairs.begin(), significant_pairs.end(),
                   std::pair<std::size_t, std::size_t>(key.first, key.second)) !=
         significant_pairs.end();
}

NemenyiResult Nemenyi(const ScoreMatrix& m, double alpha) {
  const std::size_t k = m.scores.cols();
  NemenyiResult res;
  res.q = NemenyiQ(k, alpha);
  const FriedmanResult f = Friedman(m);
  res.mean_ranks = f.mean_ranks;
  const double kd = static_cast<double>(k);
  res.cd = res.q * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(f.n)));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (std::abs(f.mean_ranks[i] - f.mean_ranks[j]) > res.cd) res.significant_pairs.push_back({i, j});
    }
  }
  return res;
}

PairedTResult PairedT(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) Fail(ErrorCode::kShapeMismatch, "paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isnan(a[i]) && !std::isnan(b[i])) d.push_back(a[i] - b[i]);
  }
  if (d.size() < 2) Fail(ErrorCode::kDegeneratePairs, "need at least 2 complete pairs");
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    Fail(ErrorCode::kDegeneratePairs, "all differences are zero");
  }
  const double n = static_cast<double>(d.size());
  PairedTResult res;
  res.mean_diff = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - res.mean_diff) * (v - res.mean_diff);
  res.sd_diff = std::sqrt(ss / (n - 1.0));
  res.df = static_cast<int>(d.size()) - 1;
  if (res.sd_diff == 0.0) {
    res.t = std::copysign(std::numeric_limits<double>::infinity(), res.mean_diff);
    res.p = 0.0;
    return res;
  }
  res.t = res.mean_diff / (res.sd_diff / std::sqrt(n));
  res.p = StudentTwoSided(res.t, res.df);
  return res;
}

}  // namespace hdm
