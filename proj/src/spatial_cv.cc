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

#include "hdm/spatial_cv.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace hdm {

std::int64_t BlockGrid::BlockOf(double x, double y) const {
  const auto ix = static_cast<std::int64_t>(std::floor((x - origin_x) / block_size));
  const auto iy = static_cast<std::int64_t>(std::floor((y - origin_y) / block_size));
  return ix * cells_y + iy;
}

std::vector<std::int64_t> BlockGrid::BlockIds() const {
  std::set<std::int64_t> s(block_of_row.begin(), block_of_row.end());
  return {s.begin(), s.end()};
}

BlockGrid AssignBlocks(const SampleTable& table, double block_size,
                       std::optional<std::pair<double, double>> origin) {
  if (!(block_size > 0.0) || !std::isfinite(block_size)) {
    Fail(ErrorCode::kNonPositiveBlockSize, "block size " + FormatDouble(block_size));
  }
  BlockGrid g;
  g.block_size = block_size;
  if (table.rows() == 0) return g;
  const auto [min_x, max_x] = std::minmax_element(table.x.begin(), table.x.end());
  const auto [min_y, max_y] = std::minmax_element(table.y.begin(), table.y.end());
  if (origin) {
    g.origin_x = std::min(origin->first, *min_x);
    g.origin_y = std::min(origin->second, *min_y);
  } else {
    g.origin_x = *min_x;
    g.origin_y = *min_y;
  }
  g.cells_y = static_cast<std::int64_t>(std::floor((*max_y - g.origin_y) / block_size)) + 1;
  g.block_of_row.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    g.block_of_row.push_back(g.BlockOf(table.x[r], table.y[r]));
  }
  return g;
}

double DefaultBlockSize(const SampleTable& table, double min_mean) {
  if (table.rows() == 0) Fail(ErrorCode::kNoTrainingRows, "empty table");
  const auto [min_x, max_x] = std::minmax_element(table.x.begin(), table.x.end());
  const auto [min_y, max_y] = std::minmax_element(table.y.begin(), table.y.end());
  const double area = std::max(*max_x - *min_x, 1.0) * std::max(*max_y - *min_y, 1.0);
  double size = std::sqrt(area * min_mean / static_cast<double>(table.rows()));
  for (int iter = 0; iter < 400; ++iter) {
    const BlockGrid g = AssignBlocks(table, size);
    const double mean = static_cast<double>(table.rows()) / static_cast<double>(g.BlockIds().size());
    if (mean >= min_mean) return size;
    size *= 1.05;
  }
  return size;
}

std::vector<std::size_t> FoldPlan::TestRows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] == fold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::TrainRows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] != fold) out.push_back(r);
  }
  return out;
}

nlohmann::json FoldPlan::ToJson() const {
  nlohmann::json assignments = nlohmann::json::array();
  for (const auto& [block, fold] : fold_of_block) {
    assignments.push_back({{"block", block}, {"fold", fold}});
  }
  return {{"n_folds", n_folds}, {"block_size", block_size}, {"assignments", assignments}};
}

namespace {

void FillRows(FoldPlan& plan, const BlockGrid& grid, const SampleTable& table,
              std::size_t num_leaves) {
  plan.fold_of_row.assign(grid.block_of_row.size(), -1);
  plan.class_histogram.assign(static_cast<std::size_t>(plan.n_folds),
                              std::vector<std::size_t>(num_leaves, 0));
  for (std::size_t r = 0; r < grid.block_of_row.size(); ++r) {
    auto it = plan.fold_of_block.find(grid.block_of_row[r]);
    if (it == plan.fold_of_block.end()) {
      Fail(ErrorCode::kMismatchedFolds, "block " + std::to_string(grid.block_of_row[r]) +
                                            " has no fold assignment");
    }
    plan.fold_of_row[r] = it->second;
    if (table.leaf[r] != kNoLabel) {
      ++plan.class_histogram[static_cast<std::size_t>(it->second)]
                            [static_cast<std::size_t>(table.leaf[r])];
    }
  }
}

}  // namespace

FoldPlan FoldPlan::FromJson(const nlohmann::json& j, const BlockGrid& grid,
                            const SampleTable& table, std::size_t num_leaves) {
  FoldPlan plan;
  plan.n_folds = j.at("n_folds").get<int>();
  plan.block_size = j.at("block_size").get<double>();
  for (const auto& a : j.at("assignments")) {
    plan.fold_of_block[a.at("block").get<std::int64_t>()] = a.at("fold").get<int>();
  }
  FillRows(plan, grid, table, num_leaves);
  return plan;
}

FoldPlan MakeFolds(const BlockGrid& grid, const SampleTable& table, std::size_t num_leaves,
                   int n_folds, std::uint64_t seed) {
  if (n_folds < 2) Fail(ErrorCode::kInvalidConfig, "n_folds must be >= 2");
  const std::vector<std::int64_t> ids = grid.BlockIds();
  if (ids.size() < static_cast<std::size_t>(n_folds)) {
    Fail(ErrorCode::kTooFewBlocks, std::to_string(ids.size()) + " blocks for " +
                                       std::to_string(n_folds) + " folds");
  }

  // Per-block histograms; unlabeled rows count toward block size only.
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;
  std::vector<std::vector<double>> hist(ids.size(), std::vector<double>(num_leaves, 0.0));
  std::vector<std::size_t> size(ids.size(), 0);
  std::vector<double> global(num_leaves, 0.0);
  double labeled = 0.0;
  for (std::size_t r = 0; r < grid.block_of_row.size(); ++r) {
    const std::size_t b = slot.at(grid.block_of_row[r]);
    ++size[b];
    if (table.leaf[r] != kNoLabel) {
      hist[b][static_cast<std::size_t>(table.leaf[r])] += 1.0;
      global[static_cast<std::size_t>(table.leaf[r])] += 1.0;
      labeled += 1.0;
    }
  }

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return size[a] > size[b]; });

  const std::size_t k = static_cast<std::size_t>(n_folds);
  std::vector<double> target(num_leaves, 0.0);
  for (std::size_t c = 0; c < num_leaves; ++c) target[c] = global[c] / static_cast<double>(k);
  auto distance = [&](const std::vector<double>& h) {
    double d = 0.0;
    for (std::size_t c = 0; c < num_leaves; ++c) {
      if (target[c] > 0.0) d += (h[c] - target[c]) * (h[c] - target[c]) / target[c];
    }
    return d;
  };

  std::vector<std::vector<double>> fold_hist(k, std::vector<double>(num_leaves, 0.0));
  std::vector<std::size_t> fold_size(k, 0);
  std::vector<int> fold_of(ids.size(), -1);
  std::vector<double> trial(num_leaves);
  for (std::size_t b : order) {
    std::size_t best = 0;
    double best_delta = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t c = 0; c < num_leaves; ++c) trial[c] = fold_hist[f][c] + hist[b][c];
      double delta = distance(trial) - distance(fold_hist[f]);
      if (labeled == 0.0) delta = 0.0;
      const bool better =
          delta < best_delta - 1e-12 ||
          (std::abs(delta - best_delta) <= 1e-12 && fold_size[f] < fold_size[best]);
      if (better) {
        best = f;
        best_delta = delta;
      }
    }
    fold_of[b] = static_cast<int>(best);
    fold_size[best] += size[b];
    for (std::size_t c = 0; c < num_leaves; ++c) fold_hist[best][c] += hist[b][c];
  }

  // Every fold must hold at least one block.
  for (std::size_t f = 0; f < k; ++f) {
    if (fold_size[f] > 0) continue;
    std::vector<std::size_t> blocks_per(k, 0);
    for (int fo : fold_of) ++blocks_per[static_cast<std::size_t>(fo)];
    const std::size_t donor = static_cast<std::size_t>(
        std::max_element(blocks_per.begin(), blocks_per.end()) - blocks_per.begin());
    std::size_t pick = ids.size();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (static_cast<std::size_t>(fold_of[b]) == donor &&
          (pick == ids.size() || size[b] < size[pick])) {
        pick = b;
      }
    }
    fold_of[pick] = static_cast<int>(f);
    fold_size[donor] -= size[pick];
    fold_size[f] += size[pick];
  }

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.block_size = grid.block_size;
  for (std::size_t b = 0; b < ids.size(); ++b) plan.fold_of_block[ids[b]] = fold_of[b];
  FillRows(plan, grid, table, num_leaves);
  return plan;
}

std::vector<StratificationIssue> CheckStratification(const FoldPlan& plan,
                                                     const SampleTable& table,
                                                     std::size_t num_leaves, double tolerance) {
  const std::vector<std::size_t> counts = table.LeafCounts(num_leaves);
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  std::vector<double> fold_total(static_cast<std::size_t>(plan.n_folds), 0.0);
  for (int f = 0; f < plan.n_folds; ++f) {
    for (std::size_t c = 0; c < num_leaves; ++c) {
      fold_total[static_cast<std::size_t>(f)] +=
          static_cast<double>(plan.class_histogram[static_cast<std::size_t>(f)][c]);
    }
  }
  std::vector<StratificationIssue> issues;
  for (std::size_t c = 0; c < num_leaves; ++c) {
    if (counts[c] < 2 * static_cast<std::size_t>(plan.n_folds)) continue;
    const double global = static_cast<double>(counts[c]) / total;
    for (int f = 0; f < plan.n_folds; ++f) {
      const double ft = fold_total[static_cast<std::size_t>(f)];
      const double share =
          ft > 0 ? static_cast<double>(plan.class_histogram[static_cast<std::size_t>(f)][c]) / ft
                 : 0.0;
      if (std::abs(share / global - 1.0) > tolerance) issues.push_back({c, f, share, global});
    }
  }
  return issues;
}

TuningSplit MakeTuningSplit(const BlockGrid& grid, const SampleTable& table,
                            const std::vector<std::size_t>& train_rows, double fraction,
                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    Fail(ErrorCode::kDegenerateSplit, "fraction must be in (0, 1), got " + FormatDouble(fraction));
  }
  std::map<std::int64_t, std::vector<std::size_t>> by_block;
  for (std::size_t r : train_rows) by_block[grid.block_of_row[r]].push_back(r);
  if (by_block.size() < 2) {
    Fail(ErrorCode::kDegenerateSplit, "need at least 2 blocks to hold one out");
  }

  std::size_t n_form = 1;
  for (int f : table.formation) n_form = std::max(n_form, static_cast<std::size_t>(f + 1));
  struct Block {
    std::vector<std::size_t> rows;
    std::vector<double> per_form;
  };
  std::vector<Block> blocks;
  std::vector<double> form_total(n_form, 0.0);
  for (auto& [id, rows] : by_block) {
    Block b{rows, std::vector<double>(n_form, 0.0)};
    for (std::size_t r : rows) {
      if (table.formation[r] != kNoLabel) {
        b.per_form[static_cast<std::size_t>(table.formation[r])] += 1.0;
        form_total[static_cast<std::size_t>(table.formation[r])] += 1.0;
      }
    }
    blocks.push_back(std::move(b));
  }
  Rng rng(seed);
  rng.Shuffle(blocks);

  const double n = static_cast<double>(train_rows.size());
  const double target = fraction * n;
  // Size error dominates; formation imbalance breaks near-ties.
  auto cost = [&](double size, const std::vector<double>& form) {
    double c = std::abs(size - target);
    for (std::size_t f = 0; f < n_form; ++f) c += 0.25 * std::abs(form[f] - fraction * form_total[f]);
    return c / n;
  };

  std::vector<bool> taken(blocks.size(), false);
  double size = 0.0;
  std::vector<double> form(n_form, 0.0);
  double current = std::numeric_limits<double>::infinity();
  std::size_t n_taken = 0;
  while (n_taken + 1 < blocks.size()) {
    std::size_t best = blocks.size();
    double best_cost = current;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (taken[i]) continue;
      std::vector<double> f2 = form;
      for (std::size_t f = 0; f < n_form; ++f) f2[f] += blocks[i].per_form[f];
      const double c = cost(size + static_cast<double>(blocks[i].rows.size()), f2);
      if (c < best_cost - 1e-15) {
        best = i;
        best_cost = c;
      }
    }
    if (best == blocks.size()) break;
    taken[best] = true;
    ++n_taken;
    size += static_cast<double>(blocks[best].rows.size());
    for (std::size_t f = 0; f < n_form; ++f) form[f] += blocks[best].per_form[f];
    current = best_cost;
  }
  if (n_taken == 0) Fail(ErrorCode::kDegenerateSplit, "holdout would be empty");

  TuningSplit split;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& dst = taken[i] ? split.holdout : split.inner_train;
    dst.insert(dst.end(), blocks[i].rows.begin(), blocks[i].rows.end());
  }
  std::sort(split.holdout.begin(), split.holdout.end());
  std::sort(split.inner_train.begin(), split.inner_train.end());
  return split;
}

void AuditLeakage(const BlockGrid& grid, const std::vector<std::size_t>& train_rows,
                  const std::vector<std::size_t>& test_rows, const std::string& context) {
  std::set<std::int64_t> train_blocks;
  for (std::size_t r : train_rows) train_blocks.insert(grid.block_of_row[r]);
  for (std::size_t r : test_rows) {
    if (train_blocks.count(grid.block_of_row[r])) {
      Fail(ErrorCode::kLeakage, context + ": block " + std::to_string(grid.block_of_row[r]) +
                                    " appears in both training and test rows");
    }
  }
}

}  // namespace hdm
