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

#include <algorithm>
#include <cmath>
#include <limits>

#include "hdm/kernels.h"
#include "hdm/metrics.h"
#include "learner_impl.h"

namespace hdm {

namespace {

constexpr std::size_t kChunkRows = 16;

// Offsets of each layer's weight block inside the flat parameter vector.
std::vector<std::size_t> LayerOffsets(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> off = {0};
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    off.push_back(off.back() + sizes[l + 1] * sizes[l] + sizes[l + 1]);
  }
  return off;
}

struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[0] = input
  std::vector<double> delta, prev_delta, scratch;
};

}  // namespace

Standardizer Standardizer::Fit(const Matrix& X, const FeatureSchema& schema) {
  Standardizer s;
  s.mean.assign(X.cols(), 0.0);
  s.scale.assign(X.cols(), 1.0);
  if (X.rows() == 0) return s;
  for (std::size_t c = 0; c < X.cols(); ++c) {
    if (c < schema.columns.size() && schema.columns[c].binary) continue;
    double m = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) m += X(r, c);
    m /= static_cast<double>(X.rows());
    double v = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) v += (X(r, c) - m) * (X(r, c) - m);
    const double sd = std::sqrt(v / static_cast<double>(X.rows()));
    s.mean[c] = m;
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::Apply(const Matrix& X) const {
  Matrix out(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) = (X(r, c) - mean[c]) / scale[c];
  }
  return out;
}

MlpNetwork::MlpNetwork(std::vector<std::size_t> layer_sizes, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) Fail(ErrorCode::kInvalidConfig, "network needs input and output layers");
  const auto off = LayerOffsets(sizes_);
  params_.assign(off.back(), 0.0);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const bool output = l + 2 == sizes_.size();
    const double sd = std::sqrt((output ? 1.0 : 2.0) / static_cast<double>(sizes_[l]));
    for (std::size_t i = 0; i < sizes_[l + 1] * sizes_[l]; ++i) {
      params_[off[l] + i] = sd * rng.Normal();
    }
  }
}

MlpNetwork::MlpNetwork(const MlpModel& model) : sizes_(model.layer_sizes), params_(model.params) {
  if (params_.size() != LayerOffsets(sizes_).back()) {
    Fail(ErrorCode::kShapeMismatch, "parameter count does not match layer sizes");
  }
}

void MlpNetwork::Logits(std::span<const double> x, std::span<double> out) const {
  const auto off = LayerOffsets(sizes_);
  std::vector<double> in(x.begin(), x.end()), next;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
    const double* W = params_.data() + off[l];
    const double* b = W + n_out * n_in;
    next.assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < n_in; ++i) s += W[o * n_in + i] * in[i];
      next[o] = (l + 2 == sizes_.size()) ? s : std::max(s, 0.0);
    }
    in.swap(next);
  }
  std::copy(in.begin(), in.end(), out.begin());
}

Matrix MlpNetwork::Logits(const Matrix& X, int threads) const {
  Matrix out(X.rows(), sizes_.back());
  kernels::ParallelFor(X.rows(), threads, [&](std::size_t r) { Logits(X.row(r), out.row(r)); });
  return out;
}

double MlpNetwork::LossGradient(const Matrix& X, std::span<const int> y,
                                std::span<const std::size_t> rows, const PreparedLoss& loss,
                                std::span<double> grad, int threads) const {
  if (rows.empty()) Fail(ErrorCode::kNoTrainingRows, "empty batch");
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != params_.size()) {
    Fail(ErrorCode::kShapeMismatch, "gradient buffer size");
  }
  const auto off = LayerOffsets(sizes_);
  const std::size_t L = sizes_.size() - 1;
  const std::size_t n_chunks = (rows.size() + kChunkRows - 1) / kChunkRows;
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(want_grad ? n_chunks : 0);

  kernels::ParallelFor(n_chunks, threads, [&](std::size_t ch) {
    Workspace ws;
    ws.acts.resize(L + 1);
    ws.scratch.assign(sizes_.back(), 0.0);
    std::vector<double> g;
    if (want_grad) g.assign(params_.size(), 0.0);
    double loss_sum = 0.0;
    const std::size_t end = std::min(rows.size(), (ch + 1) * kChunkRows);
    for (std::size_t k = ch * kChunkRows; k < end; ++k) {
      const std::size_t r = rows[k];
      ws.acts[0].assign(X.row(r).begin(), X.row(r).end());
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
        const double* W = params_.data() + off[l];
        const double* b = W + n_out * n_in;
        auto& a = ws.acts[l + 1];
        a.assign(n_out, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
          double s = b[o];
          for (std::size_t i = 0; i < n_in; ++i) s += W[o * n_in + i] * ws.acts[l][i];
          a[o] = (l + 1 == L) ? s : std::max(s, 0.0);
        }
      }
      ws.delta.assign(sizes_.back(), 0.0);
      loss_sum += loss.Evaluate(ws.acts[L], static_cast<std::size_t>(y[r]),
                                want_grad ? std::span<double>(ws.delta) : std::span<double>(),
                                ws.scratch);
      if (!want_grad) continue;
      for (std::size_t l = L; l-- > 0;) {
        const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
        const double* W = params_.data() + off[l];
        double* gW = g.data() + off[l];
        double* gb = gW + n_out * n_in;
        for (std::size_t o = 0; o < n_out; ++o) {
          const double d = ws.delta[o];
          if (d == 0.0) continue;
          gb[o] += d;
          for (std::size_t i = 0; i < n_in; ++i) gW[o * n_in + i] += d * ws.acts[l][i];
        }
        if (l == 0) break;
        ws.prev_delta.assign(n_in, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
          const double d = ws.delta[o];
          if (d == 0.0) continue;
          for (std::size_t i = 0; i < n_in; ++i) ws.prev_delta[i] += W[o * n_in + i] * d;
        }
        for (std::size_t i = 0; i < n_in; ++i) {
          if (ws.acts[l][i] <= 0.0) ws.prev_delta[i] = 0.0;
        }
        ws.delta.swap(ws.prev_delta);
      }
    }
    chunk_loss[ch] = loss_sum;
    if (want_grad) chunk_grad[ch] = std::move(g);
  });

  const double inv = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (double v : chunk_loss) total += v;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& g : chunk_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
    }
    for (double& v : grad) v *= inv;
  }
  return total * inv;
}

namespace detail {

namespace {

std::vector<int> MaskedArgmax(const Matrix& logits, const std::vector<bool>& seen) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    int best = -1;
    for (std::size_t c = 0; c < seen.size(); ++c) {
      if (seen[c] && (best < 0 || logits(r, c) > logits(r, static_cast<std::size_t>(best)))) {
        best = static_cast<int>(c);
      }
    }
    out[r] = best;
  }
  return out;
}

}  // namespace

MlpModel FitMlp(const LearnerConfig& config, const Matrix& X, const FeatureSchema& schema,
                std::span<const int> y, const std::vector<bool>& seen, int threads) {
  const MlpParams& mp = config.mlp;
  const std::size_t n = X.rows();
  const std::size_t K = seen.size();

  MlpModel model;
  model.scaler = Standardizer::Fit(X, schema);
  const Matrix Z = model.scaler.Apply(X);
  model.layer_sizes.push_back(X.cols());
  for (int h : mp.hidden) model.layer_sizes.push_back(static_cast<std::size_t>(h));
  model.layer_sizes.push_back(K);
  MlpNetwork net(model.layer_sizes, MixSeed(config.seed, "mlp-init"));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::size_t> train = order, val;
  if (mp.validation_fraction > 0.0 && n >= 20) {
    Rng split_rng(MixSeed(config.seed, "mlp-validation"));
    split_rng.Shuffle(order);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(mp.validation_fraction * static_cast<double>(n))));
    val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
  }

  std::vector<double> counts(K, 0.0);
  for (std::size_t r : train) counts[static_cast<std::size_t>(y[r])] += 1.0;
  const PreparedLoss loss(config.loss, counts);

  const Matrix Z_val = Z.SelectRows(val);
  std::vector<int> y_val;
  for (std::size_t r : val) y_val.push_back(y[r]);

  std::vector<double> grad(net.num_params()), velocity(net.num_params(), 0.0);
  std::vector<double> best_params = net.params();
  double best_score = -1.0, best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> val_rows(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) val_rows[i] = i;
  Rng order_rng(MixSeed(config.seed, "mlp-order"));
  const auto batch = static_cast<std::size_t>(std::max(mp.batch_size, 1));

  int epoch = 0;
  for (; epoch < mp.epochs; ++epoch) {
    order_rng.Shuffle(train);
    bool diverged = false;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(train.size(), start + batch);
      const double l = net.LossGradient(
          Z, y, std::span<const std::size_t>(train.data() + start, end - start), loss, grad,
          threads);
      if (!std::isfinite(l)) {
        diverged = true;
        break;
      }
      auto& w = net.params();
      for (std::size_t i = 0; i < w.size(); ++i) {
        velocity[i] = mp.momentum * velocity[i] - mp.learning_rate * grad[i];
        w[i] += velocity[i];
      }
    }
    if (diverged) break;
    if (!val.empty()) {
      const double score = MacroF1(MaskedArgmax(net.Logits(Z_val, threads), seen), y_val, K);
      // F1 saturates on small splits; validation loss breaks ties.
      const double vloss = net.LossGradient(Z_val, y_val, val_rows, loss, {}, threads);
      if (score > best_score + 1e-12 || (score >= best_score - 1e-12 && vloss < best_loss - 1e-9)) {
        best_score = std::max(best_score, score);
        best_loss = vloss;
        best_params = net.params();
        since_best = 0;
      } else if (++since_best >= mp.patience) {
        ++epoch;
        break;
      }
    }
  }
  if (!val.empty() || !std::all_of(net.params().begin(), net.params().end(),
                                   [](double v) { return std::isfinite(v); })) {
    net.params() = best_params;
  }
  model.params = net.params();
  model.epochs_run = epoch;
  return model;
}

Matrix PredictMlp(const MlpModel& model, const Matrix& X, const std::vector<bool>& seen,
                  int threads) {
  const MlpNetwork net(model);
  Matrix logits = net.Logits(model.scaler.Apply(X), threads);
  for (std::size_t r = 0; r < logits.rows(); ++r) MaskedSoftmax(logits.row(r), seen);
  return logits;
}

}  // namespace detail
}  // namespace hdm
