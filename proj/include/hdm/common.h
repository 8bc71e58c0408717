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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hdm {

// Every failure surfaced by the library carries one of these codes. The CLI
// maps validation codes to exit status 1 and the rest to 2.
enum class ErrorCode {
  kEmptyTaxonomy,
  kDuplicateCode,
  kUnmappableLeaf,
  kSchemaError,
  kUnknownLabel,
  kNonNumericFeature,
  kInvalidSpec,
  kNonPositiveBlockSize,
  kTooFewBlocks,
  kDegenerateSplit,
  kZeroCount,
  kNonFiniteLogits,
  kInvalidConfig,
  kInsufficientData,
  kSchemaMismatch,
  kEmptySearchSpace,
  kEmptyMask,
  kNoTrainingRows,
  kKindMismatch,
  kUnknownFormation,
  kShapeMismatch,
  kEmptyEnsemble,
  kBadK,
  kDegenerateMatrix,
  kUnsupportedK,
  kDegeneratePairs,
  kEmptyBackground,
  kSingleModality,
  kMismatchedFolds,
  kLeakage,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// True for errors caused by bad input rather than a failure while running.
bool IsValidationError(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Copies the listed rows, in order.
  Matrix SelectRows(std::span<const std::size_t> rows) const;
  // Copies the listed columns, in order.
  Matrix SelectCols(std::span<const std::size_t> cols) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Predictor families. Column names carry the lowercase spelling as a prefix.
enum class Modality { kBioreg, kAbio, kRsbio, kMsi, kSar, kOther };

inline constexpr Modality kAllModalities[] = {Modality::kBioreg, Modality::kAbio,
                                              Modality::kRsbio,  Modality::kMsi,
                                              Modality::kSar,    Modality::kOther};

std::string_view ModalityName(Modality m);   // "abio"
std::string_view ModalityLabel(Modality m);  // "ABIO"
// Accepts either spelling, case-insensitive. Throws kSchemaError.
Modality ParseModality(std::string_view name);

// Set of modalities as a bitmask.
class ModalityMask {
 public:
  ModalityMask() = default;
  ModalityMask(std::initializer_list<Modality> ms) {
    for (Modality m : ms) Add(m);
  }

  void Add(Modality m) { bits_ |= Bit(m); }
  void Remove(Modality m) { bits_ &= ~Bit(m); }
  bool Contains(Modality m) const { return (bits_ & Bit(m)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Modality> Members() const;

  // "abio,rsbio" or one of the presets A, AR, ARM, ARMS, ALL.
  static ModalityMask Parse(std::string_view text);
  std::string ToString() const;

  bool operator==(const ModalityMask&) const = default;

 private:
  static unsigned Bit(Modality m) { return 1u << static_cast<unsigned>(m); }
  unsigned bits_ = 0;
};

// Deterministic generator. The bit stream of mt19937_64 is fixed by the
// standard; the distributions below are implemented here so that sampled
// values do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t NextU64();
  double Uniform();  // [0, 1)
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed from a parent seed and a task identity.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t MixSeed(std::uint64_t seed, std::string_view stream);

// Pairwise summation; result independent of how callers chunk the input.
double PairwiseSum(std::span<const double> values);

// FNV-1a, used for schema and taxonomy fingerprints.
std::uint64_t Fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL);

// Thread count for parallel kernels: HDM_THREADS if set, else the OpenMP default.
int DefaultThreads();

}  // namespace hdm
