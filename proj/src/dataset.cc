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

#include "hdm/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hdm {

std::uint64_t FeatureSchema::Hash() const {
  std::uint64_t h = Fnv1a("schema");
  for (const auto& c : columns) {
    h = Fnv1a(c.name, h);
    h = Fnv1a(";", h);
  }
  return h;
}

std::vector<std::size_t> FeatureSchema::ColumnsFor(const ModalityMask& mask) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (mask.Contains(columns[i].modality)) out.push_back(i);
  }
  return out;
}

FeatureSchema FeatureSchema::Select(const std::vector<std::size_t>& cols) const {
  FeatureSchema out;
  for (std::size_t c : cols) out.columns.push_back(columns[c]);
  return out;
}

ModalityMask FeatureSchema::PresentModalities() const {
  ModalityMask m;
  for (const auto& c : columns) m.Add(c.modality);
  return m;
}

nlohmann::json FeatureSchema::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    cols.push_back({{"name", c.name},
                    {"modality", std::string(ModalityName(c.modality))},
                    {"binary", c.binary},
                    {"derived", c.derived}});
  }
  return cols;
}

FeatureSchema FeatureSchema::FromJson(const nlohmann::json& j) {
  FeatureSchema s;
  for (const auto& c : j) {
    s.columns.push_back({c.at("name").get<std::string>(),
                         ParseModality(c.at("modality").get<std::string>()),
                         c.at("binary").get<bool>(), c.at("derived").get<bool>()});
  }
  return s;
}

SampleTable SampleTable::Subset(const std::vector<std::size_t>& rows) const {
  SampleTable out;
  out.schema = schema;
  out.bioregion_levels = bioregion_levels;
  out.features = features.SelectRows(rows);
  for (std::size_t r : rows) {
    out.row_ids.push_back(row_ids[r]);
    out.x.push_back(x[r]);
    out.y.push_back(y[r]);
    out.bioregion.push_back(bioregion[r]);
    out.formation.push_back(formation[r]);
    out.leaf.push_back(leaf[r]);
  }
  return out;
}

std::vector<std::size_t> SampleTable::LeafCounts(std::size_t num_leaves,
                                                 const std::vector<std::size_t>& rows) const {
  std::vector<std::size_t> counts(num_leaves, 0);
  auto add = [&](std::size_t r) {
    if (leaf[r] != kNoLabel) ++counts[static_cast<std::size_t>(leaf[r])];
  };
  if (rows.empty()) {
    for (std::size_t r = 0; r < this->rows(); ++r) add(r);
  } else {
    for (std::size_t r : rows) add(r);
  }
  return counts;
}

std::vector<std::vector<std::string>> ReadCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) Fail(ErrorCode::kSchemaError, "unterminated quote in '" + path + "'");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string CsvEscape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr const char* kMandatory[] = {"plot_id", "x", "y", "bioregion", "formation", "class"};

bool IsMissingToken(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" ||
         s == "NULL";
}

std::optional<double> ParseNumber(const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  if (b < e && *b == '+') ++b;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct ParsedHeader {
  std::map<std::string, std::size_t> mandatory;
  std::vector<std::size_t> feature_src;
  std::vector<Column> columns;
};

ParsedHeader ParseHeader(const std::vector<std::string>& header) {
  ParsedHeader h;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    if (!seen.insert(name).second) Fail(ErrorCode::kSchemaError, "duplicate column '" + name + "'");
    if (std::find(std::begin(kMandatory), std::end(kMandatory), name) != std::end(kMandatory)) {
      h.mandatory[name] = i;
      continue;
    }
    const auto sep = name.find("__");
    if (sep == std::string::npos || sep == 0 || sep + 2 >= name.size()) {
      Fail(ErrorCode::kSchemaError,
           "column '" + name + "' is neither mandatory nor <modality>__<name>");
    }
    Column col;
    col.name = name;
    col.modality = ParseModality(name.substr(0, sep));
    h.feature_src.push_back(i);
    h.columns.push_back(col);
  }
  for (const char* m : kMandatory) {
    if (!h.mandatory.count(m)) Fail(ErrorCode::kSchemaError, std::string("missing column '") + m + "'");
  }
  return h;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void AppendBioregionOneHot(SampleTable& table, const std::vector<std::string>& levels) {
  const std::size_t old_cols = table.features.cols();
  Matrix m(table.rows(), old_cols + levels.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto src = table.features.row(r);
    std::copy(src.begin(), src.end(), m.row(r).begin());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      m(r, old_cols + l) = table.bioregion[r] == levels[l] ? 1.0 : 0.0;
    }
  }
  table.features = std::move(m);
  for (const auto& level : levels) {
    table.schema.columns.push_back({"bioreg__region_" + level, Modality::kBioreg, true, true});
  }
  table.bioregion_levels = levels;
}

SampleTable LoadDataset(const std::string& path, const Taxonomy& taxonomy,
                        const LoadOptions& options, LoadReport* report) {
  const auto csv = ReadCsv(path);
  if (csv.empty()) Fail(ErrorCode::kSchemaError, "'" + path + "' has no header");
  const ParsedHeader header = ParseHeader(csv[0]);
  const std::size_t n_feat = header.columns.size();

  SampleTable t;
  t.schema.columns = header.columns;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<bool>> missing;
  LoadReport rep;

  for (std::size_t line = 1; line < csv.size(); ++line) {
    const auto& rec = csv[line];
    const std::string where = path + ":" + std::to_string(line + 1);
    if (rec.size() != csv[0].size()) {
      Fail(ErrorCode::kSchemaError, where + ": expected " + std::to_string(csv[0].size()) +
                                        " fields, found " + std::to_string(rec.size()));
    }
    ++rep.rows_read;
    const auto get = [&](const char* name) -> const std::string& {
      return rec[header.mandatory.at(name)];
    };

    std::vector<double> row(n_feat, 0.0);
    std::vector<bool> miss(n_feat, false);
    bool any_missing = false;
    for (std::size_t j = 0; j < n_feat; ++j) {
      const std::string& cell = rec[header.feature_src[j]];
      if (IsMissingToken(cell)) {
        miss[j] = true;
        any_missing = true;
        continue;
      }
      auto v = ParseNumber(cell);
      if (!v) {
        Fail(ErrorCode::kNonNumericFeature,
             where + ": column '" + header.columns[j].name + "' value '" + cell + "'");
      }
      row[j] = *v;
    }
    auto x = ParseNumber(get("x"));
    auto y = ParseNumber(get("y"));
    if (!x || !y) {
      if (IsMissingToken(get("x")) || IsMissingToken(get("y"))) {
        any_missing = true;
      } else {
        Fail(ErrorCode::kNonNumericFeature, where + ": coordinates must be numeric");
      }
    }

    int leaf = kNoLabel;
    int formation = kNoLabel;
    const std::string& cls = get("class");
    const std::string& form = get("formation");
    if (!cls.empty()) {
      auto li = taxonomy.leaf_index(cls);
      if (!li) Fail(ErrorCode::kUnknownLabel, where + ": class '" + cls + "'");
      leaf = static_cast<int>(*li);
      formation = static_cast<int>(taxonomy.formation_of(*li));
      if (!form.empty() && form != taxonomy.formations()[taxonomy.formation_of(*li)]) {
        Fail(ErrorCode::kUnknownLabel,
             where + ": class '" + cls + "' does not belong to formation '" + form + "'");
      }
    } else if (!form.empty()) {
      auto fi = taxonomy.formation_index(form);
      if (!fi) Fail(ErrorCode::kUnknownLabel, where + ": formation '" + form + "'");
      formation = static_cast<int>(*fi);
    }

    if (any_missing && options.missing == MissingPolicy::kDropRow) {
      ++rep.rows_dropped;
      continue;
    }
    if (!x || !y) Fail(ErrorCode::kSchemaError, where + ": missing coordinates");
    t.row_ids.push_back(get("plot_id"));
    t.x.push_back(*x);
    t.y.push_back(*y);
    t.bioregion.push_back(get("bioregion"));
    t.leaf.push_back(leaf);
    t.formation.push_back(formation);
    values.push_back(std::move(row));
    missing.push_back(std::move(miss));
  }

  t.features = Matrix(values.size(), n_feat);
  for (std::size_t j = 0; j < n_feat; ++j) {
    std::vector<double> present;
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (!missing[r][j]) present.push_back(values[r][j]);
    }
    double fill = present.empty() ? 0.0 : Median(present);
    bool binary = !present.empty();
    for (double v : present) binary = binary && (v == 0.0 || v == 1.0);
    t.schema.columns[j].binary = binary;
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (missing[r][j]) {
        t.features(r, j) = fill;
        ++rep.cells_imputed;
      } else {
        t.features(r, j) = values[r][j];
      }
    }
  }

  std::vector<std::string> levels;
  if (options.bioregion_levels) {
    levels = *options.bioregion_levels;
  } else {
    std::set<std::string> s(t.bioregion.begin(), t.bioregion.end());
    levels.assign(s.begin(), s.end());
  }
  AppendBioregionOneHot(t, levels);
  if (report) *report = rep;
  return t;
}

Taxonomy TaxonomyFromDataset(const std::string& path) {
  const auto csv = ReadCsv(path);
  if (csv.empty()) Fail(ErrorCode::kSchemaError, "'" + path + "' has no header");
  const ParsedHeader header = ParseHeader(csv[0]);
  const std::size_t ci = header.mandatory.at("class");
  const std::size_t fi = header.mandatory.at("formation");
  std::map<std::string, std::string> parent;
  for (std::size_t line = 1; line < csv.size(); ++line) {
    const auto& rec = csv[line];
    if (rec.size() != csv[0].size() || rec[ci].empty()) continue;
    if (rec[fi].empty()) {
      Fail(ErrorCode::kUnmappableLeaf, "class '" + rec[ci] + "' has no formation");
    }
    auto [it, inserted] = parent.emplace(rec[ci], rec[fi]);
    if (!inserted && it->second != rec[fi]) {
      Fail(ErrorCode::kUnmappableLeaf, "class '" + rec[ci] + "' appears under two formations");
    }
  }
  std::vector<std::string> codes;
  for (const auto& [leaf, _] : parent) codes.push_back(leaf);
  return Taxonomy::Build(std::move(codes), FormationRule::Explicit(std::move(parent)));
}

void WriteDataset(const std::string& path, const SampleTable& table, const Taxonomy& taxonomy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << "plot_id,x,y,bioregion,formation,class";
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < table.schema.columns.size(); ++j) {
    if (table.schema.columns[j].derived) continue;
    cols.push_back(j);
    out << ',' << CsvEscape(table.schema.columns[j].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << CsvEscape(table.row_ids[r]) << ',' << FormatDouble(table.x[r]) << ','
        << FormatDouble(table.y[r]) << ',' << CsvEscape(table.bioregion[r]) << ',';
    if (table.formation[r] != kNoLabel) {
      out << CsvEscape(taxonomy.formations()[static_cast<std::size_t>(table.formation[r])]);
    }
    out << ',';
    if (table.leaf[r] != kNoLabel) {
      out << CsvEscape(taxonomy.leaves()[static_cast<std::size_t>(table.leaf[r])]);
    }
    for (std::size_t j : cols) out << ',' << FormatDouble(table.features(r, j));
    out << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace hdm
