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
#include <optional>
#include <string>
#include <vector>

#include "hdm/common.h"
#include "hdm/taxonomy.h"

namespace hdm {

struct Column {
  std::string name;  // full CSV name, e.g. "abio__bio1"
  Modality modality = Modality::kOther;
  // Binary indicator columns (one-hot groups) are never standardized.
  bool binary = false;
  // Bioregion indicators synthesized at ingestion; not written back to CSV.
  bool derived = false;
};

// Column layout shared by a table and every model fitted on it.
struct FeatureSchema {
  std::vector<Column> columns;

  std::uint64_t Hash() const;
  std::vector<std::size_t> ColumnsFor(const ModalityMask& mask) const;
  FeatureSchema Select(const std::vector<std::size_t>& cols) const;
  ModalityMask PresentModalities() const;

  nlohmann::json ToJson() const;
  static FeatureSchema FromJson(const nlohmann::json& j);
};

inline constexpr int kNoLabel = -1;

// Immutable once built; shared read-only by every task.
struct SampleTable {
  std::vector<std::string> row_ids;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> bioregion;
  std::vector<int> formation;  // taxonomy formation index or kNoLabel
  std::vector<int> leaf;       // taxonomy leaf index or kNoLabel
  Matrix features;
  FeatureSchema schema;
  // Sorted bioregion codes behind the derived one-hot columns.
  std::vector<std::string> bioregion_levels;

  std::size_t rows() const { return row_ids.size(); }
  SampleTable Subset(const std::vector<std::size_t>& rows) const;
  // Per-leaf counts over the given rows (all rows when empty).
  std::vector<std::size_t> LeafCounts(std::size_t num_leaves,
                                      const std::vector<std::size_t>& rows = {}) const;
};

enum class MissingPolicy { kDropRow, kMedianImpute };

struct LoadOptions {
  MissingPolicy missing = MissingPolicy::kDropRow;
  // Levels for the bioregion one-hot encoding; taken from the file when unset.
  // Models pass their training levels so that the schema matches.
  std::optional<std::vector<std::string>> bioregion_levels;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t cells_imputed = 0;
};

SampleTable LoadDataset(const std::string& path, const Taxonomy& taxonomy,
                        const LoadOptions& options = {}, LoadReport* report = nullptr);

// Builds the taxonomy from the (class, formation) pairs found in the file.
Taxonomy TaxonomyFromDataset(const std::string& path);

// Writes mandatory columns plus every non-derived feature column. Values are
// written in shortest round-trip form.
void WriteDataset(const std::string& path, const SampleTable& table, const Taxonomy& taxonomy);

// Appends one-hot bioregion columns (derived, BIOREG) for the given levels.
void AppendBioregionOneHot(SampleTable& table, const std::vector<std::string>& levels);

// Minimal RFC 4180 reader/writer helpers, exposed for the CLI and tests.
std::vector<std::vector<std::string>> ReadCsv(const std::string& path);
std::string CsvEscape(const std::string& field);
std::string FormatDouble(double v);

}  // namespace hdm
