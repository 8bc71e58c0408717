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

#include "hdm/attribution.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdm/kernels.h"

namespace hdm {

namespace {

constexpr std::size_t kPermutationsPerBatch = 32;

}  // namespace

AttributionResult SampledShapley(const ProbaFn& predict, std::span<const double> x,
                                 const Matrix& background, const ShapleyOptions& options) {
  if (background.rows() == 0) Fail(ErrorCode::kEmptyBackground, "background set is empty");
  if (options.permutations < 1) Fail(ErrorCode::kInvalidConfig, "need at least one permutation");
  const std::size_t D = x.size();
  if (background.cols() != D) Fail(ErrorCode::kShapeMismatch, "background width != feature count");
  const std::size_t B = background.rows();
  const std::size_t M = options.permutations;

  AttributionResult res;
  res.phi.assign(D, 0.0);
  res.permutations = M;
  res.background_size = B;
  res.seed = options.seed;

  Matrix xm(1, D);
  std::copy(x.begin(), x.end(), xm.row(0).begin());
  const Matrix fx = predict(xm);
  if (options.target_class) {
    res.target_class = *options.target_class;
  } else {
    res.target_class = kernels::serial::RowArgmax(fx)[0];
  }
  const std::size_t c = res.target_class;
  if (c >= fx.cols()) Fail(ErrorCode::kShapeMismatch, "target class out of range");
  res.f_x = fx(0, c);
  const Matrix fb = predict(background);
  for (std::size_t b = 0; b < B; ++b) res.f_background += fb(b, c);
  res.f_background /= static_cast<double>(B);

  Rng rng(options.seed);
  std::vector<std::size_t> order(B);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.Shuffle(order);
  std::vector<std::size_t> perm(D);
  std::vector<double> totals;

  for (std::size_t start = 0; start < M; start += kPermutationsPerBatch) {
    const std::size_t count = std::min(kPermutationsPerBatch, M - start);
    Matrix batch(count * (D + 1), D);
    std::vector<std::vector<std::size_t>> perms(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.Shuffle(perm);
      perms[i] = perm;
      const auto base = background.row(order[(start + i) % B]);
      const std::size_t first = i * (D + 1);
      std::copy(base.begin(), base.end(), batch.row(first).begin());
      for (std::size_t k = 0; k < D; ++k) {
        auto dst = batch.row(first + k + 1);
        std::copy(batch.row(first + k).begin(), batch.row(first + k).end(), dst.begin());
        dst[perm[k]] = x[perm[k]];
      }
    }
    const Matrix f = predict(batch);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t first = i * (D + 1);
      for (std::size_t k = 0; k < D; ++k) {
        res.phi[perms[i][k]] += f(first + k + 1, c) - f(first + k, c);
      }
      totals.push_back(f(first + D, c) - f(first, c));
    }
  }
  for (double& v : res.phi) v /= static_cast<double>(M);

  const double sum_phi = std::accumulate(res.phi.begin(), res.phi.end(), 0.0);
  res.efficiency_gap = std::abs(sum_phi - (res.f_x - res.f_background));
  if (M > 1) {
    const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(M);
    double ss = 0.0;
    for (double t : totals) ss += (t - mean) * (t - mean);
    res.standard_error = std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M));
  }
  return res;
}

std::vector<AttributionResult> AttributeRows(const ProbaFn& predict, const Matrix& X,
                                             const std::vector<std::string>& row_ids,
                                             const Matrix& background,
                                             const ShapleyOptions& options, int threads) {
  if (row_ids.size() != X.rows()) Fail(ErrorCode::kShapeMismatch, "one id per row");
  std::vector<AttributionResult> out(X.rows());
  kernels::ParallelFor(X.rows(), threads, [&](std::size_t r) {
    ShapleyOptions o = options;
    o.seed = MixSeed(options.seed, row_ids[r]);
    out[r] = SampledShapley(predict, X.row(r), background, o);
  });
  return out;
}

ModalityShares ModalityContribution(std::span<const AttributionResult> results,
                                    std::span<const Modality> feature_modality) {
  ModalityShares s;
  std::map<Modality, double> acc;
  for (Modality m : feature_modality) acc[m] = 0.0;
  for (const auto& r : results) {
    if (r.phi.size() != feature_modality.size()) {
      Fail(ErrorCode::kShapeMismatch, "one modality tag per feature");
    }
    double total = 0.0;
    for (double v : r.phi) total += std::abs(v);
    if (total <= 0.0) {
      ++s.zero_samples;
      continue;
    }
    ++s.samples;
    std::map<Modality, double> part;
    for (std::size_t i = 0; i < r.phi.size(); ++i) part[feature_modality[i]] += std::abs(r.phi[i]);
    for (const auto& [m, v] : part) acc[m] += v / total;
  }
  s.defined = s.samples > 0;
  if (s.defined) {
    for (auto& [m, v] : acc) s.share[m] = v / static_cast<double>(s.samples);
  }
  return s;
}

}  // namespace hdm
