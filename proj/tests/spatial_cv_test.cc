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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "test_util.h"

namespace hdm {
namespace {

using nlohmann::json;
using testing::CodeOf;

const Taxonomy& Tax() {
  static const Taxonomy t = Taxonomy::Build({"A1", "B1"}, FormationRule::PrefixLength(1));
  return t;
}

SampleTable PointTable(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::vector<std::string>& labels = {}) {
  std::vector<std::string> l = labels;
  if (l.empty()) l.assign(xs.size(), "A1");
  return testing::MakeTable(Tax(), l, xs, ys, Matrix(xs.size(), 1), testing::Schema({{"abio__f", Modality::kAbio}}));
}

TEST(SpatialCv, SameAndDifferentCells) {
  auto g = AssignBlocks(PointTable({0, 0.5}, {0, 0.5}), 1.0);
  EXPECT_EQ(g.block_of_row[0], g.block_of_row[1]);
  g = AssignBlocks(PointTable({0, 1.5}, {0, 0}), 1.0);
  EXPECT_NE(g.block_of_row[0], g.block_of_row[1]);
}

TEST(SpatialCv, BlockCountMatchesCellEnumeration) {
  Rng rng(3);
  std::vector<double> xs, ys;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(rng.Uniform(0, 10));
    ys.push_back(rng.Uniform(0, 10));
  }
  const auto table = PointTable(xs, ys);
  const auto g = AssignBlocks(table, 1.0);
  const double ox = *std::min_element(xs.begin(), xs.end());
  const double oy = *std::min_element(ys.begin(), ys.end());
  std::set<std::pair<long, long>> cells;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cells.insert({std::lround(std::floor(xs[i] - ox)), std::lround(std::floor(ys[i] - oy))});
  }
  EXPECT_LE(g.BlockIds().size(), 100u);
  EXPECT_EQ(g.BlockIds().size(), cells.size());
  // Rows share a block exactly when they share a cell.
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 50; ++j) {
      const bool same_cell = std::floor(xs[i] - ox) == std::floor(xs[j] - ox) &&
                             std::floor(ys[i] - oy) == std::floor(ys[j] - oy);
      EXPECT_EQ(g.block_of_row[i] == g.block_of_row[j], same_cell);
    }
  }
}

TEST(SpatialCv, GridAnchoredAtZeroStaysWithinHundredCells) {
  Rng rng(4);
  std::vector<double> xs, ys;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(rng.Uniform(0, 10));
    ys.push_back(rng.Uniform(0, 10));
  }
  const auto g = AssignBlocks(PointTable(xs, ys), 1.0, std::make_pair(0.0, 0.0));
  EXPECT_LE(g.BlockIds().size(), 100u);
}

TEST(SpatialCv, NonPositiveBlockSize) {
  EXPECT_EQ(CodeOf([] { AssignBlocks(PointTable({0}, {0}), 0.0); }), ErrorCode::kNonPositiveBlockSize);
  EXPECT_EQ(CodeOf([] { AssignBlocks(PointTable({0}, {0}), -2.0); }), ErrorCode::kNonPositiveBlockSize);
}

TEST(SpatialCv, StratifiedTwoFoldAssignment) {
  // Blocks 0..3 hold 10 rows each of A, B, A, B.
  std::vector<double> xs, ys;
  std::vector<std::string> labels;
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < 10; ++i) {
      xs.push_back(b * 10.0 + 0.5);
      ys.push_back(0.5);
      labels.push_back(b % 2 ? "B1" : "A1");
    }
  }
  const auto table = PointTable(xs, ys, labels);
  const auto grid = AssignBlocks(table, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto plan = MakeFolds(grid, table, 2, 2, seed);
    for (int f = 0; f < 2; ++f) {
      EXPECT_EQ(plan.class_histogram[f][0], 10u);
      EXPECT_EQ(plan.class_histogram[f][1], 10u);
    }
  }
}

TEST(SpatialCv, TooFewBlocks) {
  const auto table = PointTable({0.5, 1.5}, {0.5, 0.5});
  const auto grid = AssignBlocks(table, 1.0);
  EXPECT_EQ(CodeOf([&] { MakeFolds(grid, table, 2, 3, 1); }), ErrorCode::kTooFewBlocks);
}

TEST(SpatialCv, FoldsPartitionRowsAndKeepBlocksWhole) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  const auto grid = AssignBlocks(table, DefaultBlockSize(table));
  const auto plan = MakeFolds(grid, table, tax.num_leaves(), 4, 9);
  std::vector<int> seen(table.rows(), 0);
  for (int f = 0; f < 4; ++f) {
    const auto test = plan.TestRows(f);
    const auto train = plan.TrainRows(f);
    EXPECT_EQ(test.size() + train.size(), table.rows());
    EXPECT_FALSE(test.empty());
    for (std::size_t r : test) ++seen[r];
    EXPECT_NO_THROW(AuditLeakage(grid, train, test, "fold"));
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    EXPECT_EQ(plan.fold_of_row[r], plan.fold_of_block.at(grid.block_of_row[r]));
  }
  const auto again = MakeFolds(grid, table, tax.num_leaves(), 4, 9);
  EXPECT_EQ(again.fold_of_block, plan.fold_of_block);
}

TEST(SpatialCv, DefaultBlockSizeMeetsMeanOccupancy) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  const double size = DefaultBlockSize(table, 20.0);
  const auto g = AssignBlocks(table, size);
  EXPECT_GE(static_cast<double>(table.rows()) / static_cast<double>(g.BlockIds().size()), 20.0);
  const auto smaller = AssignBlocks(table, size / 1.05);
  EXPECT_LT(static_cast<double>(table.rows()) / static_cast<double>(smaller.BlockIds().size()), 20.0);
}

TEST(SpatialCv, PlanJsonRoundTrip) {
  const auto [table, tax] = GenerateSynthetic(testing::SmallSpec());
  const auto grid = AssignBlocks(table, DefaultBlockSize(table));
  const auto plan = MakeFolds(grid, table, tax.num_leaves(), 3, 2);
  const auto back = FoldPlan::FromJson(plan.ToJson(), grid, table, tax.num_leaves());
  EXPECT_EQ(back.fold_of_row, plan.fold_of_row);
  EXPECT_EQ(back.class_histogram, plan.class_histogram);
}

TEST(SpatialCv, LeakageAuditDetectsSharedBlock) {
  const auto table = PointTable({0.1, 0.2, 5.0}, {0.1, 0.2, 5.0});
  const auto grid = AssignBlocks(table, 1.0);
  EXPECT_EQ(CodeOf([&] { AuditLeakage(grid, {0, 2}, {1}, "ctx"); }), ErrorCode::kLeakage);
  EXPECT_NO_THROW(AuditLeakage(grid, {0, 1}, {2}, "ctx"));
}

SampleTable BlocksOfSizes(const std::vector<int>& sizes) {
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (int i = 0; i < sizes[b]; ++i) {
      xs.push_back(static_cast<double>(b) * 2.0 + 0.5);
      ys.push_back(0.5);
    }
  }
  return PointTable(xs, ys);
}

std::vector<std::size_t> AllRows(const SampleTable& t) {
  std::vector<std::size_t> r(t.rows());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

TEST(SpatialCv, TuningSplitEqualBlocks) {
  const auto table = BlocksOfSizes(std::vector<int>(10, 8));
  const auto grid = AssignBlocks(table, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto split = MakeTuningSplit(grid, table, AllRows(table), 0.1, seed);
    EXPECT_EQ(split.holdout.size(), 8u);
    EXPECT_NO_THROW(AuditLeakage(grid, split.inner_train, split.holdout, "split"));
  }
}

TEST(SpatialCv, TuningSplitDegenerateFraction) {
  const auto table = BlocksOfSizes({3, 3, 3});
  const auto grid = AssignBlocks(table, 1.0);
  EXPECT_EQ(CodeOf([&] { MakeTuningSplit(grid, table, AllRows(table), 0.0, 1); }),
            ErrorCode::kDegenerateSplit);
  EXPECT_EQ(CodeOf([&] { MakeTuningSplit(grid, table, AllRows(table), 1.0, 1); }),
            ErrorCode::kDegenerateSplit);
}

// Closest achievable subset sum to `target` by dynamic programming.
double BestSubsetGap(const std::vector<int>& sizes, double target) {
  const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<char> reach(static_cast<std::size_t>(total) + 1, 0);
  reach[0] = 1;
  for (int s : sizes) {
    for (int v = total; v >= s; --v) reach[v] = reach[v] || reach[v - s];
  }
  double best = 1e300;
  for (int v = 1; v < total; ++v) {
    if (reach[v]) best = std::min(best, std::abs(v - target));
  }
  return best;
}

TEST(SpatialCv, TuningSplitUnequalBlocksNearSubsetSumOptimum) {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> sizes;
    for (int b = 0; b < 37; ++b) sizes.push_back(1 + static_cast<int>(rng.Index(30)));
    const auto table = BlocksOfSizes(sizes);
    const auto grid = AssignBlocks(table, 1.0);
    const auto split = MakeTuningSplit(grid, table, AllRows(table), 0.1, 100 + trial);
    const double n = static_cast<double>(table.rows());
    const double share = static_cast<double>(split.holdout.size()) / n;
    EXPECT_GE(share, 0.05);
    EXPECT_LE(share, 0.2);
    const double gap = std::abs(static_cast<double>(split.holdout.size()) - 0.1 * n);
    EXPECT_LE(gap, BestSubsetGap(sizes, 0.1 * n) + 0.05 * n);
  }
}

TEST(SpatialCv, StratificationCheckFlagsSkew) {
  // All A rows land in one fold.
  std::vector<double> xs, ys;
  std::vector<std::string> labels;
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < 10; ++i) {
      xs.push_back(b * 10.0 + 0.5);
      ys.push_back(0.5);
      labels.push_back(b < 2 ? "A1" : "B1");
    }
  }
  const auto table = PointTable(xs, ys, labels);
  const auto grid = AssignBlocks(table, 1.0);
  auto plan = MakeFolds(grid, table, 2, 2, 1);
  EXPECT_TRUE(CheckStratification(plan, table, 2, 0.5).empty());
  json j = plan.ToJson();
  for (auto& a : j["assignments"]) {
    a["fold"] = a["block"].get<std::int64_t>() < grid.BlockOf(20.5, 0.5) ? 0 : 1;
  }
  const auto skewed = FoldPlan::FromJson(j, grid, table, 2);
  EXPECT_FALSE(CheckStratification(skewed, table, 2, 0.5).empty());
}

}  // namespace
}  // namespace hdm
