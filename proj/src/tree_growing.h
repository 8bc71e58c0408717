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

#include <cstdint>
#include <span>
#include <vector>

#include "hdm/common.h"
#include "hdm/learners.h"

namespace hdm::detail {

// Column-major bin codes. Cut points sit halfway between neighbouring
// distinct values (or between quantiles once a column has more distinct
// values than bins), so "bin <= b" is the same test as "x <= cut(b)".
class BinnedFeatures {
 public:
  static constexpr int kMaxBins = 256;

  explicit BinnedFeatures(const Matrix& X, int max_bins = kMaxBins);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cuts_.size(); }
  std::uint8_t bin(std::size_t row, std::size_t feature) const {
    return codes_[feature * rows_ + row];
  }
  int num_bins(std::size_t feature) const { return static_cast<int>(cuts_[feature].size()) + 1; }
  double cut(std::size_t feature, int b) const { return cuts_[feature][static_cast<std::size_t>(b)]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<double>> cuts_;
  std::vector<std::uint8_t> codes_;
};

struct GrowLimits {
  int max_depth = 8;
  int min_leaf = 1;
};

// Weighted Gini tree. Leaves hold normalized weighted class frequencies.
// `mtry` features are drawn per node; rows with zero weight are ignored.
Tree GrowClassificationTree(const BinnedFeatures& data, std::span<const int> y,
                            std::span<const double> row_weight, std::vector<std::size_t> rows,
                            std::size_t num_classes, const GrowLimits& limits, std::size_t mtry,
                            Rng& rng);

// Second-order regression tree: leaf value -G / (H + l2).
Tree GrowRegressionTree(const BinnedFeatures& data, std::span<const double> grad,
                        std::span<const double> hess, std::vector<std::size_t> rows,
                        const GrowLimits& limits, double l2);

}  // namespace hdm::detail
