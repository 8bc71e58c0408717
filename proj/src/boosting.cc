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
#include <limits>
#include <numeric>

#include "hdm/kernels.h"
#include "learner_impl.h"
#include "tree_growing.h"

namespace hdm::detail {

void MaskedSoftmax(std::span<double> row, const std::vector<bool>& seen) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (seen[c]) top = std::max(top, row[c]);
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    row[c] = seen[c] ? std::exp(row[c] - top) : 0.0;
    sum += row[c];
  }
  for (double& v : row) v /= sum;
}

namespace {

constexpr double kMinHessian = 1e-16;

void AddRound(const std::vector<Tree>& trees, double rate, const Matrix& X, Matrix& scores,
              int threads) {
  kernels::ParallelFor(X.rows(), threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < trees.size(); ++c) {
      const auto v = trees[c].Evaluate(X.row(r));
      if (!v.empty()) scores(r, c) += rate * v[0];
    }
  });
}

}  // namespace

BoostingModel FitBoosting(const LearnerConfig& config, const Matrix& X, std::span<const int> y,
                          const std::vector<bool>& seen, std::span<const double> class_weight,
                          int threads) {
  const BoostingParams& bp = config.boosting;
  const std::size_t n = X.rows();
  const std::size_t K = seen.size();
  const BinnedFeatures data(X);
  const GrowLimits limits{bp.max_depth, bp.min_leaf};

  std::vector<double> sample_weight(n);
  std::vector<double> prior(K, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    sample_weight[r] = class_weight[static_cast<std::size_t>(y[r])];
    prior[static_cast<std::size_t>(y[r])] += sample_weight[r];
  }
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);

  BoostingModel model;
  model.learning_rate = bp.learning_rate;
  model.init_score.assign(K, 0.0);
  for (std::size_t c = 0; c < K; ++c) {
    if (seen[c]) model.init_score[c] = std::log(prior[c] / total);
  }

  Matrix scores(n, K);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(model.init_score.begin(), model.init_score.end(), scores.row(r).begin());
  }
  Rng rng(MixSeed(config.seed, "boosting"));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto take = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(bp.subsample * static_cast<double>(n))), 1, n);

  Matrix probs(n, K);
  for (int round = 0; round < bp.n_rounds; ++round) {
    probs = scores;
    for (std::size_t r = 0; r < n; ++r) MaskedSoftmax(probs.row(r), seen);

    std::vector<std::size_t> rows = all;
    if (take < n) {
      rng.Shuffle(rows);
      rows.resize(take);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<Tree> trees(K);
    kernels::ParallelFor(K, threads, [&](std::size_t c) {
      if (!seen[c]) return;
      std::vector<double> g(n, 0.0), h(n, 0.0);
      for (std::size_t r : rows) {
        const double p = probs(r, c);
        const double target = static_cast<std::size_t>(y[r]) == c ? 1.0 : 0.0;
        g[r] = sample_weight[r] * (p - target);
        h[r] = std::max(sample_weight[r] * p * (1.0 - p), kMinHessian);
      }
      trees[c] = GrowRegressionTree(data, g, h, rows, limits, bp.l2);
    });
    AddRound(trees, bp.learning_rate, X, scores, threads);
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

Matrix PredictBoosting(const BoostingModel& model, const Matrix& X, const std::vector<bool>& seen,
                       int threads) {
  Matrix scores(X.rows(), seen.size());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::copy(model.init_score.begin(), model.init_score.end(), scores.row(r).begin());
  }
  for (const auto& trees : model.rounds) AddRound(trees, model.learning_rate, X, scores, threads);
  for (std::size_t r = 0; r < X.rows(); ++r) MaskedSoftmax(scores.row(r), seen);
  return scores;
}

}  // namespace hdm::detail
