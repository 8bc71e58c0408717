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

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hdm/common.h"
#include "hdm/dataset.h"
#include "hdm/synthetic.h"
#include "hdm/taxonomy.h"

namespace hdm::testing {

// Error code raised by fn; records a failure when nothing is thrown.
inline ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

// Table with one row per label; coordinates and features given per row.
inline SampleTable MakeTable(const Taxonomy& tax, const std::vector<std::string>& labels,
                             const std::vector<double>& xs, const std::vector<double>& ys,
                             const Matrix& features, const FeatureSchema& schema,
                             const std::vector<std::string>& bioregions = {}) {
  SampleTable t;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    t.row_ids.push_back("r" + std::to_string(r));
    t.x.push_back(xs.empty() ? static_cast<double>(r) : xs[r]);
    t.y.push_back(ys.empty() ? 0.0 : ys[r]);
    t.bioregion.push_back(bioregions.empty() ? "b0" : bioregions[r]);
    const auto leaf = tax.leaf_index(labels[r]);
    t.leaf.push_back(leaf ? static_cast<int>(*leaf) : kNoLabel);
    t.formation.push_back(leaf ? static_cast<int>(tax.formation_of(*leaf)) : kNoLabel);
  }
  t.features = features;
  t.schema = schema;
  return t;
}

inline FeatureSchema Schema(const std::vector<std::pair<std::string, Modality>>& cols) {
  FeatureSchema s;
  for (const auto& [name, m] : cols) s.columns.push_back({name, m, false, false});
  return s;
}

// Small, fast synthetic benchmark used across tests.
inline SyntheticSpec SmallSpec(std::uint64_t seed = 11) {
  SyntheticSpec s;
  s.n_formations = 3;
  s.leaves_per_formation = {3};
  s.base_samples = 60;
  s.decay_ratio = 1.0;
  s.seed = seed;
  return s;
}

// Scratch directory removed at scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("hdm_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string File(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void WriteText(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace hdm::testing
