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

#include "hdm/kernels.h"

#include <algorithm>
#include <cmath>
#include <exception>

#include "hdm/probability.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdm::kernels {

void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  const auto count = static_cast<std::ptrdiff_t>(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(hdm_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

namespace {

std::size_t RankOf(std::span<const double> row, std::size_t y) {
  std::size_t rank = 1;
  const double py = row[y];
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] > py || (j < y && row[j] == py)) ++rank;
  }
  return rank;
}

int ArgmaxOf(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<int>(best);
}

void CheckCombine(std::span<const Matrix* const> members, std::span<const double> weights) {
  if (members.empty()) Fail(ErrorCode::kEmptyEnsemble, "no members");
  if (members.size() != weights.size()) Fail(ErrorCode::kShapeMismatch, "one weight per member");
  for (const Matrix* m : members) {
    if (m->rows() != members[0]->rows() || m->cols() != members[0]->cols()) {
      Fail(ErrorCode::kShapeMismatch, "member tables differ in shape");
    }
  }
}

}  // namespace

namespace serial {

std::vector<std::size_t> TruthRanks(const Matrix& probs, std::span<const int> truth) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    out[r] = RankOf(probs.row(r), static_cast<std::size_t>(truth[r]));
  }
  return out;
}

std::vector<int> RowArgmax(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) out[r] = ArgmaxOf(probs.row(r));
  return out;
}

Matrix WeightedCombine(std::span<const Matrix* const> members, std::span<const double> weights) {
  CheckCombine(members, weights);
  Matrix out(members[0]->rows(), members[0]->cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    double s = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) s += weights[m] * members[m]->data()[i];
    out.data()[i] = s;
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<std::size_t> TruthRanks(const Matrix& probs, std::span<const int> truth, int threads) {
  std::vector<std::size_t> out(probs.rows());
  const auto n = static_cast<std::ptrdiff_t>(probs.rows());
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    out[row] = RankOf(probs.row(row), static_cast<std::size_t>(truth[row]));
  }
  return out;
}

std::vector<int> RowArgmax(const Matrix& probs, int threads) {
  std::vector<int> out(probs.rows());
  const auto n = static_cast<std::ptrdiff_t>(probs.rows());
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    out[static_cast<std::size_t>(r)] = ArgmaxOf(probs.row(static_cast<std::size_t>(r)));
  }
  return out;
}

Matrix WeightedCombine(std::span<const Matrix* const> members, std::span<const double> weights,
                       int threads) {
  CheckCombine(members, weights);
  Matrix out(members[0]->rows(), members[0]->cols());
  const auto n = static_cast<std::ptrdiff_t>(out.data().size());
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
      s += weights[m] * members[m]->data()[static_cast<std::size_t>(i)];
    }
    out.data()[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

}  // namespace omp

}  // namespace hdm::kernels

namespace hdm {

double ProbabilityTable::MaxRowSumError() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::vector<int> ProbabilityTable::Argmax() const { return kernels::serial::RowArgmax(p); }

}  // namespace hdm
