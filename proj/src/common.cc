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

#include "hdm/common.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdm {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyTaxonomy: return "EmptyTaxonomy";
    case ErrorCode::kDuplicateCode: return "DuplicateCode";
    case ErrorCode::kUnmappableLeaf: return "UnmappableLeaf";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kNonNumericFeature: return "NonNumericFeature";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNonPositiveBlockSize: return "NonPositiveBlockSize";
    case ErrorCode::kTooFewBlocks: return "TooFewBlocks";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kZeroCount: return "ZeroCount";
    case ErrorCode::kNonFiniteLogits: return "NonFiniteLogits";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kEmptySearchSpace: return "EmptySearchSpace";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kNoTrainingRows: return "NoTrainingRows";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kUnknownFormation: return "UnknownFormation";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kDegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::kUnsupportedK: return "UnsupportedK";
    case ErrorCode::kDegeneratePairs: return "DegeneratePairs";
    case ErrorCode::kEmptyBackground: return "EmptyBackground";
    case ErrorCode::kSingleModality: return "SingleModality";
    case ErrorCode::kMismatchedFolds: return "MismatchedFolds";
    case ErrorCode::kLeakage: return "Leakage";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool IsValidationError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyTaxonomy:
    case ErrorCode::kDuplicateCode:
    case ErrorCode::kUnmappableLeaf:
    case ErrorCode::kSchemaError:
    case ErrorCode::kUnknownLabel:
    case ErrorCode::kNonNumericFeature:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kNonPositiveBlockSize:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kEmptySearchSpace:
    case ErrorCode::kEmptyMask:
    case ErrorCode::kBadK:
    case ErrorCode::kUnsupportedK:
    case ErrorCode::kSingleModality:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kMismatchedFolds:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code) {}

void Fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

Matrix Matrix::SelectRows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::SelectCols(std::span<const std::size_t> cols) const {
  Matrix out(rows_, cols.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = (*this)(r, cols[j]);
  }
  return out;
}

std::string_view ModalityName(Modality m) {
  switch (m) {
    case Modality::kBioreg: return "bioreg";
    case Modality::kAbio: return "abio";
    case Modality::kRsbio: return "rsbio";
    case Modality::kMsi: return "msi";
    case Modality::kSar: return "sar";
    case Modality::kOther: return "other";
  }
  return "other";
}

std::string_view ModalityLabel(Modality m) {
  switch (m) {
    case Modality::kBioreg: return "BIOREG";
    case Modality::kAbio: return "ABIO";
    case Modality::kRsbio: return "RSBIO";
    case Modality::kMsi: return "MSI";
    case Modality::kSar: return "SAR";
    case Modality::kOther: return "OTHER";
  }
  return "OTHER";
}

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Modality ParseModality(std::string_view name) {
  const std::string n = Lower(Trim(name));
  for (Modality m : kAllModalities) {
    if (n == ModalityName(m)) return m;
  }
  Fail(ErrorCode::kSchemaError, "unknown modality '" + std::string(name) + "'");
}

std::vector<Modality> ModalityMask::Members() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities) {
    if (Contains(m)) out.push_back(m);
  }
  return out;
}

ModalityMask ModalityMask::Parse(std::string_view text) {
  const std::string t = Lower(Trim(text));
  if (t == "a") return {Modality::kAbio};
  if (t == "ar") return {Modality::kAbio, Modality::kRsbio};
  if (t == "arm") return {Modality::kAbio, Modality::kRsbio, Modality::kMsi};
  if (t == "arms") return {Modality::kAbio, Modality::kRsbio, Modality::kMsi, Modality::kSar};
  ModalityMask mask;
  if (t == "all") {
    for (Modality m : kAllModalities) mask.Add(m);
    return mask;
  }
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t end = t.find(',', start);
    if (end == std::string::npos) end = t.size();
    const std::string item = Trim(std::string_view(t).substr(start, end - start));
    if (!item.empty()) mask.Add(ParseModality(item));
    start = end + 1;
  }
  return mask;
}

std::string ModalityMask::ToString() const {
  std::string out;
  for (Modality m : Members()) {
    if (!out.empty()) out += ',';
    out += ModalityName(m);
  }
  return out;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::NextU64() { return engine_(); }

double Rng::Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::Index(std::size_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = NextU64();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t MixSeed(std::uint64_t seed, std::string_view stream) {
  return MixSeed(seed, Fnv1a(stream));
}

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

std::uint64_t Fnv1a(std::string_view text, std::uint64_t h) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int DefaultThreads() {
  if (const char* env = std::getenv("HDM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hdm
