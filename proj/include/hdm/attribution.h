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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdm/common.h"

namespace hdm {

// Maps a batch of feature rows to class probabilities (one row per input).
// Must be safe to call concurrently.
using ProbaFn = std::function<Matrix(const Matrix&)>;

struct ShapleyOptions {
  std::size_t permutations = 200;
  std::uint64_t seed = 1;
  // Explained output; defaults to the class predicted at x.
  std::optional<std::size_t> target_class;
};

struct AttributionResult {
  std::vector<double> phi;
  std::size_t target_class = 0;
  double f_x = 0.0;
  double f_background = 0.0;  // mean target output over the background
  double efficiency_gap = 0.0;
  double standard_error = 0.0;  // Monte Carlo s.e. of sum(phi)
  std::size_t permutations = 0;
  std::size_t background_size = 0;
  std::uint64_t seed = 0;
};

// Interventional Shapley values by permutation sampling. Permutation m starts
// from background row order[m mod B] (a seeded shuffle), so every background
// row is used equally often when M is a multiple of B. Throws kEmptyBackground.
AttributionResult SampledShapley(const ProbaFn& predict, std::span<const double> x,
                                 const Matrix& background, const ShapleyOptions& options);

// One attribution per row of X; row r uses seed MixSeed(seed, row_ids[r]).
std::vector<AttributionResult> AttributeRows(const ProbaFn& predict, const Matrix& X,
                                             const std::vector<std::string>& row_ids,
                                             const Matrix& background,
                                             const ShapleyOptions& options, int threads = 1);

struct ModalityShares {
  std::map<Modality, double> share;  // sums to 1 when defined
  bool defined = false;
  std::size_t samples = 0;
  std::size_t zero_samples = 0;  // all-zero attributions, skipped
};

// Mean over samples of sum_{i in m}|phi_i| / sum_i |phi_i|.
ModalityShares ModalityContribution(std::span<const AttributionResult> results,
                                    std::span<const Modality> feature_modality);

}  // namespace hdm
