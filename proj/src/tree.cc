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
#include <numeric>

#include "tree_growing.h"

namespace hdm {

std::span<const double> Tree::Evaluate(std::span<const double> x) const {
  if (nodes.empty()) return {};
  std::size_t i = 0;
  while (nodes[i].leaf < 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                       : n.right);
  }
  const auto dim = static_cast<std::size_t>(value_dim);
  return {values.data() + static_cast<std::size_t>(nodes[i].leaf) * dim, dim};
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[i].leaf < 0) {
      stack.push_back({static_cast<std::size_t>(nodes[i].left), d + 1});
      stack.push_back({static_cast<std::size_t>(nodes[i].right), d + 1});
    }
  }
  return deepest;
}

namespace detail {

namespace {

double Midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

struct Pending {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  int bin = 0;
  double gain = 0.0;
};

constexpr double kMinGain = 1e-12;

// Appends the split children and stable-partitions rows[begin, end).
void ApplySplit(const BinnedFeatures& data, const Split& s, const Pending& p,
                std::vector<std::size_t>& rows, Tree& tree, std::vector<Pending>& stack) {
  auto first = rows.begin() + static_cast<std::ptrdiff_t>(p.begin);
  auto last = rows.begin() + static_cast<std::ptrdiff_t>(p.end);
  auto mid = std::stable_partition(first, last, [&](std::size_t r) {
    return static_cast<int>(data.bin(r, s.feature)) <= s.bin;
  });
  const std::size_t split_at = static_cast<std::size_t>(mid - rows.begin());
  const int left = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes.push_back({});
  TreeNode& n = tree.nodes[p.node];
  n.feature = static_cast<int>(s.feature);
  n.threshold = data.cut(s.feature, s.bin);
  n.left = left;
  n.right = left + 1;
  // Right pushed first so the left subtree is expanded first.
  stack.push_back({static_cast<std::size_t>(left + 1), split_at, p.end, p.depth + 1});
  stack.push_back({static_cast<std::size_t>(left), p.begin, split_at, p.depth + 1});
}

void MakeLeaf(Tree& tree, std::size_t node, std::span<const double> value) {
  tree.nodes[node].leaf = static_cast<int>(tree.values.size() / value.size());
  tree.values.insert(tree.values.end(), value.begin(), value.end());
}

}  // namespace

BinnedFeatures::BinnedFeatures(const Matrix& X, int max_bins)
    : rows_(X.rows()), cuts_(X.cols()), codes_(X.rows() * X.cols()) {
  max_bins = std::clamp(max_bins, 2, kMaxBins);
  std::vector<double> col(rows_);
  for (std::size_t f = 0; f < X.cols(); ++f) {
    for (std::size_t r = 0; r < rows_; ++r) col[r] = X(r, f);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto& cuts = cuts_[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 1; i < distinct.size(); ++i) {
        cuts.push_back(Midpoint(distinct[i - 1], distinct[i]));
      }
    } else {
      for (int q = 1; q < max_bins; ++q) {
        const double v = sorted[static_cast<std::size_t>(q) * rows_ / static_cast<std::size_t>(max_bins)];
        auto next = std::upper_bound(distinct.begin(), distinct.end(), v);
        if (next == distinct.end()) continue;
        const double c = Midpoint(v, *next);
        if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
      }
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      codes_[f * rows_ + r] = static_cast<std::uint8_t>(
          std::lower_bound(cuts.begin(), cuts.end(), col[r]) - cuts.begin());
    }
  }
}

Tree GrowClassificationTree(const BinnedFeatures& data, std::span<const int> y,
                            std::span<const double> row_weight, std::vector<std::size_t> rows,
                            std::size_t num_classes, const GrowLimits& limits, std::size_t mtry,
                            Rng& rng) {
  const std::size_t K = num_classes;
  const std::size_t P = data.cols();
  mtry = std::clamp<std::size_t>(mtry, 1, std::max<std::size_t>(P, 1));
  const auto min_leaf = static_cast<std::size_t>(std::max(limits.min_leaf, 1));

  Tree tree;
  tree.value_dim = static_cast<int>(K);
  tree.nodes.push_back({});
  std::vector<Pending> stack = {{0, 0, rows.size(), 0}};

  std::vector<std::size_t> feature_pool(P);
  std::vector<double> totals(K), left(K), hist;
  std::vector<std::size_t> counts;

  auto impurity = [K](const std::vector<double>& t, double w) {
    if (w <= 0.0) return 0.0;
    double sq = 0.0;
    for (std::size_t c = 0; c < K; ++c) sq += t[c] * t[c];
    return w - sq / w;
  };

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    std::fill(totals.begin(), totals.end(), 0.0);
    for (std::size_t i = p.begin; i < p.end; ++i) {
      totals[static_cast<std::size_t>(y[rows[i]])] += row_weight[rows[i]];
    }
    const double W = std::accumulate(totals.begin(), totals.end(), 0.0);
    const auto present = std::count_if(totals.begin(), totals.end(), [](double t) { return t > 0; });
    const std::size_t n = p.end - p.begin;

    Split best;
    if (p.depth < limits.max_depth && n >= 2 * min_leaf && present > 1 && W > 0.0 && P > 0) {
      const double parent = impurity(totals, W);
      std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < mtry; ++i) {
        std::swap(feature_pool[i], feature_pool[i + rng.Index(P - i)]);
      }
      std::vector<std::size_t> candidates(feature_pool.begin(),
                                          feature_pool.begin() + static_cast<std::ptrdiff_t>(mtry));
      std::sort(candidates.begin(), candidates.end());
      for (std::size_t f : candidates) {
        const int nb = data.num_bins(f);
        if (nb < 2) continue;
        hist.assign(static_cast<std::size_t>(nb) * K, 0.0);
        counts.assign(static_cast<std::size_t>(nb), 0);
        for (std::size_t i = p.begin; i < p.end; ++i) {
          const std::size_t r = rows[i];
          const std::size_t b = data.bin(r, f);
          hist[b * K + static_cast<std::size_t>(y[r])] += row_weight[r];
          ++counts[b];
        }
        std::fill(left.begin(), left.end(), 0.0);
        std::size_t n_left = 0;
        double w_left = 0.0;
        for (int b = 0; b + 1 < nb; ++b) {
          const auto ub = static_cast<std::size_t>(b);
          n_left += counts[ub];
          for (std::size_t c = 0; c < K; ++c) {
            left[c] += hist[ub * K + c];
            w_left += hist[ub * K + c];
          }
          if (counts[ub] == 0) continue;
          if (n_left < min_leaf || n - n_left < min_leaf) continue;
          const double w_right = W - w_left;
          if (w_left <= 0.0 || w_right <= 0.0) continue;
          double sq_r = 0.0;
          for (std::size_t c = 0; c < K; ++c) {
            const double t = totals[c] - left[c];
            sq_r += t * t;
          }
          const double gain = parent - impurity(left, w_left) - (w_right - sq_r / w_right);
          if (gain > kMinGain && gain > best.gain) best = {true, f, b, gain};
        }
      }
    }
    if (best.found) {
      ApplySplit(data, best, p, rows, tree, stack);
    } else {
      for (double& t : totals) t /= W > 0.0 ? W : 1.0;
      MakeLeaf(tree, p.node, totals);
    }
  }
  return tree;
}

Tree GrowRegressionTree(const BinnedFeatures& data, std::span<const double> grad,
                        std::span<const double> hess, std::vector<std::size_t> rows,
                        const GrowLimits& limits, double l2) {
  const std::size_t P = data.cols();
  const auto min_leaf = static_cast<std::size_t>(std::max(limits.min_leaf, 1));
  Tree tree;
  tree.value_dim = 1;
  tree.nodes.push_back({});
  std::vector<Pending> stack = {{0, 0, rows.size(), 0}};
  std::vector<double> hg, hh;
  std::vector<std::size_t> counts;

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    double G = 0.0, H = 0.0;
    for (std::size_t i = p.begin; i < p.end; ++i) {
      G += grad[rows[i]];
      H += hess[rows[i]];
    }
    const std::size_t n = p.end - p.begin;
    Split best;
    if (p.depth < limits.max_depth && n >= 2 * min_leaf) {
      const double parent = G * G / (H + l2);
      for (std::size_t f = 0; f < P; ++f) {
        const int nb = data.num_bins(f);
        if (nb < 2) continue;
        hg.assign(static_cast<std::size_t>(nb), 0.0);
        hh.assign(static_cast<std::size_t>(nb), 0.0);
        counts.assign(static_cast<std::size_t>(nb), 0);
        for (std::size_t i = p.begin; i < p.end; ++i) {
          const std::size_t r = rows[i];
          const std::size_t b = data.bin(r, f);
          hg[b] += grad[r];
          hh[b] += hess[r];
          ++counts[b];
        }
        double gl = 0.0, hl = 0.0;
        std::size_t n_left = 0;
        for (int b = 0; b + 1 < nb; ++b) {
          const auto ub = static_cast<std::size_t>(b);
          gl += hg[ub];
          hl += hh[ub];
          n_left += counts[ub];
          if (counts[ub] == 0) continue;
          if (n_left < min_leaf || n - n_left < min_leaf) continue;
          const double gr = G - gl, hr = H - hl;
          const double gain = gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent;
          if (gain > kMinGain && gain > best.gain) best = {true, f, b, gain};
        }
      }
    }
    if (best.found) {
      ApplySplit(data, best, p, rows, tree, stack);
    } else {
      const double v = -G / (H + l2);
      MakeLeaf(tree, p.node, std::span<const double>(&v, 1));
    }
  }
  return tree;
}

}  // namespace detail
}  // namespace hdm
