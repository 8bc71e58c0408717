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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdm/dataset.h"

namespace hdm {

// Square grid cells of side `block_size`; a block id is the flattened cell.
struct BlockGrid {
  double block_size = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::int64_t cells_y = 1;
  std::vector<std::int64_t> block_of_row;

  std::int64_t BlockOf(double x, double y) const;
  // Sorted distinct block ids present in the table.
  std::vector<std::int64_t> BlockIds() const;
};

// Origin defaults to the lower-left corner of the table's bounding box.
BlockGrid AssignBlocks(const SampleTable& table, double block_size,
                       std::optional<std::pair<double, double>> origin = std::nullopt);

// Smallest block size (grown in 5% steps from the uniform-density guess)
// for which the mean occupied block holds at least `min_mean` samples.
double DefaultBlockSize(const SampleTable& table, double min_mean = 20.0);

struct FoldPlan {
  int n_folds = 0;
  double block_size = 0.0;
  std::map<std::int64_t, int> fold_of_block;
  std::vector<int> fold_of_row;
  std::vector<std::vector<std::size_t>> class_histogram;  // [fold][leaf]

  std::vector<std::size_t> TestRows(int fold) const;
  std::vector<std::size_t> TrainRows(int fold) const;

  // {"n_folds":k,"block_size":s,"assignments":[{"block":id,"fold":f},...]}
  nlohmann::json ToJson() const;
  // Rebuilds row assignments for `grid`; blocks missing from the plan throw.
  static FoldPlan FromJson(const nlohmann::json& j, const BlockGrid& grid,
                           const SampleTable& table, std::size_t num_leaves);
};

// Greedy stratified assignment. Blocks are taken in decreasing sample count
// (equal counts in seeded random order); each goes to the fold whose Pearson
// distance to its target histogram (global proportions times N/k) drops the
// most. Ties go to the smaller fold, then the lower fold index.
FoldPlan MakeFolds(const BlockGrid& grid, const SampleTable& table, std::size_t num_leaves,
                   int n_folds, std::uint64_t seed);

struct StratificationIssue {
  std::size_t leaf;
  int fold;
  double fold_share;
  double global_share;
};

// Leaves with at least 2 * n_folds samples whose per-fold share deviates from
// the global share by more than `tolerance` (relative).
std::vector<StratificationIssue> CheckStratification(const FoldPlan& plan,
                                                     const SampleTable& table,
                                                     std::size_t num_leaves, double tolerance);

struct TuningSplit {
  std::vector<std::size_t> inner_train;
  std::vector<std::size_t> holdout;
};

// Moves whole blocks of `train_rows` to the holdout until its size is as
// close to `fraction` as block granularity allows, balancing formations.
TuningSplit MakeTuningSplit(const BlockGrid& grid, const SampleTable& table,
                            const std::vector<std::size_t>& train_rows, double fraction,
                            std::uint64_t seed);

// Throws kLeakage when any block contributes rows to both sides.
void AuditLeakage(const BlockGrid& grid, const std::vector<std::size_t>& train_rows,
                  const std::vector<std::size_t>& test_rows, const std::string& context);

}  // namespace hdm
