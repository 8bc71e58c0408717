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

// Data-parallel inner loops. Each kernel has a plain serial version, kept as
// the reference the OpenMP version is tested against, and an OpenMP version
// that produces identical results for any thread count.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hdm/common.h"

namespace hdm::kernels {

// Runs body(i) for i in [0, n). Iterations must write disjoint outputs.
void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

namespace serial {

// 1-based rank of truth[r] in row r: 1 + #{p_j > p_y} + #{j < y : p_j == p_y}.
std::vector<std::size_t> TruthRanks(const Matrix& probs, std::span<const int> truth);
// Lowest index among the row maxima.
std::vector<int> RowArgmax(const Matrix& probs);
// out = sum_m weights[m] * members[m], accumulated in member order.
Matrix WeightedCombine(std::span<const Matrix* const> members, std::span<const double> weights);

}  // namespace serial

namespace omp {

std::vector<std::size_t> TruthRanks(const Matrix& probs, std::span<const int> truth, int threads);
std::vector<int> RowArgmax(const Matrix& probs, int threads);
Matrix WeightedCombine(std::span<const Matrix* const> members, std::span<const double> weights,
                       int threads);

}  // namespace omp

}  // namespace hdm::kernels
