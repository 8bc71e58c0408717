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

#include "hdm/kernels.h"
#include "learner_impl.h"
#include "tree_growing.h"

namespace hdm::detail {

ForestModel FitForest(const LearnerConfig& config, const Matrix& X, std::span<const int> y,
                      std::size_t num_classes, std::span<const double> class_weight, int threads) {
  const ForestParams& fp = config.forest;
  const std::size_t n = X.rows();
  const BinnedFeatures data(X);
  const auto mtry = static_cast<std::size_t>(
      std::max(1.0, std::round(fp.feature_fraction * static_cast<double>(X.cols()))));
  const GrowLimits limits{fp.max_depth, fp.min_leaf};

  ForestModel model;
  model.trees.resize(static_cast<std::size_t>(fp.n_trees));
  kernels::ParallelFor(model.trees.size(), threads, [&](std::size_t t) {
    Rng rng(MixSeed(config.seed, t));
    std::vector<double> weight(n, 0.0);
    if (fp.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) weight[rng.Index(n)] += 1.0;
    } else {
      std::fill(weight.begin(), weight.end(), 1.0);
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (weight[r] > 0.0) {
        weight[r] *= class_weight[static_cast<std::size_t>(y[r])];
        rows.push_back(r);
      }
    }
    model.trees[t] =
        GrowClassificationTree(data, y, weight, std::move(rows), num_classes, limits, mtry, rng);
  });
  return model;
}

Matrix PredictForest(const ForestModel& model, const Matrix& X, std::size_t num_classes,
                     int threads) {
  Matrix out(X.rows(), num_classes);
  const double scale = model.trees.empty() ? 0.0 : 1.0 / static_cast<double>(model.trees.size());
  kernels::ParallelFor(X.rows(), threads, [&](std::size_t r) {
    auto dst = out.row(r);
    for (const Tree& tree : model.trees) {
      const auto v = tree.Evaluate(X.row(r));
      for (std::size_t c = 0; c < num_classes; ++c) dst[c] += v[c];
    }
    for (double& d : dst) d *= scale;
  });
  return out;
}

}  // namespace hdm::detail
