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

#include <string>
#include <vector>

#include "hdm/common.h"

namespace hdm {

// Per-row probability vectors over a declared class list. Rows sum to 1.
struct ProbabilityTable {
  std::vector<std::string> classes;
  Matrix p;
  // Rows that had to be filled by a fallback rule (e.g. zero mass).
  std::vector<bool> flagged_rows;
  // Columns for classes that were absent from training; always 0.
  std::vector<bool> unseen_classes;

  ProbabilityTable() = default;
  ProbabilityTable(std::vector<std::string> cls, std::size_t rows)
      : classes(std::move(cls)),
        p(rows, classes.size()),
        flagged_rows(rows, false),
        unseen_classes(classes.size(), false) {}

  std::size_t rows() const { return p.rows(); }
  std::size_t cols() const { return p.cols(); }

  // Largest |row sum - 1| over all rows.
  double MaxRowSumError() const;
  std::vector<int> Argmax() const;
};

}  // namespace hdm
