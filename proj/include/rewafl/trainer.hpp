// Copyright 2026 The rewafl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// @file trainer.hpp
/// @brief Mini-trainer: softmax classifiers (multinomial logistic regression or
/// a one-hidden-layer ReLU MLP), mini-batch SGD, evaluation and FedAvg.
///
/// Parameter layout in `ModelParams::values`:
///   logistic: W[C x d] row-major, b[C]
///   mlp:      W1[H x d], b1[H], W2[C x H], b2[C]

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "rewafl/dataset.hpp"
#include "rewafl/errors.hpp"
#include "rewafl/rng.hpp"

namespace rewafl {

struct ModelShape {
  std::size_t inputs = 0;
  /// 0 selects multinomial logistic regression.
  std::size_t hidden = 0;
  std::size_t classes = 0;

  bool is_mlp() const noexcept { return hidden > 0; }

  std::size_t parameter_count() const noexcept {
    if (!is_mlp()) return classes * inputs + classes;
    return hidden * inputs + hidden + classes * hidden + classes;
  }

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct ModelParams {
  ModelShape shape;
  std::vector<double> values;
};

struct LossReport {
  std::vector<double> per_sample;
  double mean = 0.0;
};

/// Sum with O(log n) error growth; the result depends only on the order of
/// `xs`, not on how a caller chunked the work.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline LossReport make_loss_report(std::vector<double> per_sample) {
  LossReport r;
  r.mean = per_sample.empty()
               ? 0.0
               : pairwise_sum(per_sample) / static_cast<double>(per_sample.size());
  r.per_sample = std::move(per_sample);
  return r;
}

/// Zero weights for logistic regression; He-scaled Gaussian first layer for
/// the MLP (a zero first layer never breaks symmetry).
inline ModelParams init_model(const ModelShape& shape, std::uint64_t seed) {
  ModelParams m{shape, std::vector<double>(shape.parameter_count(), 0.0)};
  if (shape.is_mlp()) {
    Engine rng = make_engine(seed, 0, 0, StreamTag::model_init);
    std::normal_distribution<double> w(0.0, std::sqrt(2.0 / static_cast<double>(shape.inputs)));
    for (std::size_t i = 0; i < shape.hidden * shape.inputs; ++i) m.values[i] = w(rng);
    std::normal_distribution<double> w2(0.0, std::sqrt(1.0 / static_cast<double>(shape.hidden)));
    const std::size_t off = shape.hidden * shape.inputs + shape.hidden;
    for (std::size_t i = 0; i < shape.classes * shape.hidden; ++i) m.values[off + i] = w2(rng);
  }
  return m;
}

namespace detail {

/// Scratch buffers reused across samples.
struct Workspace {
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> dhidden;

  explicit Workspace(const ModelShape& s)
      : hidden(s.hidden), logits(s.classes), probs(s.classes), dhidden(s.hidden) {}
};

inline void forward(const ModelParams& m, std::span<const double> x, Workspace& ws) {
  const auto& s = m.shape;
  const double* p = m.values.data();
  std::span<const double> input = x;
  std::size_t in_dim = s.inputs;
  if (s.is_mlp()) {
    const double* w1 = p;
    const double* b1 = p + s.hidden * s.inputs;
    for (std::size_t h = 0; h < s.hidden; ++h) {
      double z = b1[h];
      for (std::size_t j = 0; j < s.inputs; ++j) z += w1[h * s.inputs + j] * x[j];
      ws.hidden[h] = z > 0.0 ? z : 0.0;
    }
    p = b1 + s.hidden;
    input = ws.hidden;
    in_dim = s.hidden;
  }
  const double* w = p;
  const double* b = p + s.classes * in_dim;
  for (std::size_t c = 0; c < s.classes; ++c) {
    double z = b[c];
    for (std::size_t j = 0; j < in_dim; ++j) z += w[c * in_dim + j] * input[j];
    ws.logits[c] = z;
  }
}

/// Cross-entropy of the current logits against `label`; fills ws.probs.
inline double softmax_xent(int label, Workspace& ws) {
  const double zmax = *std::max_element(ws.logits.begin(), ws.logits.end());
  double denom = 0.0;
  for (std::size_t c = 0; c < ws.logits.size(); ++c) {
    ws.probs[c] = std::exp(ws.logits[c] - zmax);
    denom += ws.probs[c];
  }
  for (double& q : ws.probs) q /= denom;
  // Both terms are non-negative, so the loss is too.
  return (zmax - ws.logits[static_cast<std::size_t>(label)]) + std::log(denom);
}

/// Accumulate d(loss)/d(params) for one sample into `grad` (scaled by `scale`).
inline void backward(const ModelParams& m, std::span<const double> x, int label, double scale,
                     Workspace& ws, std::vector<double>& grad) {
  const auto& s = m.shape;
  std::size_t off = 0;
  std::span<const double> input = x;
  std::size_t in_dim = s.inputs;
  if (s.is_mlp()) {
    off = s.hidden * s.inputs + s.hidden;
    input = ws.hidden;
    in_dim = s.hidden;
  }
  const double* w_out = m.values.data() + off;
  double* gw = grad.data() + off;
  double* gb = gw + s.classes * in_dim;
  if (s.is_mlp()) std::fill(ws.dhidden.begin(), ws.dhidden.end(), 0.0);
  for (std::size_t c = 0; c < s.classes; ++c) {
    const double dz =
        scale * (ws.probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
    gb[c] += dz;
    for (std::size_t j = 0; j < in_dim; ++j) {
      gw[c * in_dim + j] += dz * input[j];
      if (s.is_mlp()) ws.dhidden[j] += dz * w_out[c * in_dim + j];
    }
  }
  if (s.is_mlp()) {
    double* gw1 = grad.data();
    double* gb1 = gw1 + s.hidden * s.inputs;
    for (std::size_t h = 0; h < s.hidden; ++h) {
      if (ws.hidden[h] <= 0.0) continue;
      const double dh = ws.dhidden[h];
      gb1[h] += dh;
      for (std::size_t j = 0; j < s.inputs; ++j) gw1[h * s.inputs + j] += dh * x[j];
    }
  }
}

}  // namespace detail

inline void check_shape(const ModelParams& m, const Dataset& ds) {
  if (m.shape.inputs != ds.dims || m.shape.classes != static_cast<std::size_t>(ds.classes) ||
      m.values.size() != m.shape.parameter_count()) {
    throw Error("model shape does not match dataset");
  }
}

/// Mean softmax cross-entropy over `batch`; when `grad` is non-null it
/// receives the gradient of that mean.
inline double loss_and_gradient(const ModelParams& m, const Dataset& ds,
                                std::span<const std::size_t> batch, std::vector<double>* grad) {
  detail::Workspace ws(m.shape);
  if (grad) grad->assign(m.values.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i : batch) {
    detail::forward(m, ds.row(i), ws);
    total += detail::softmax_xent(ds.labels[i], ws);
    if (grad) detail::backward(m, ds.row(i), ds.labels[i], scale, ws, *grad);
  }
  return total * scale;
}

/// Per-sample losses of `m` on the listed samples.
inline LossReport evaluate_losses(const ModelParams& m, const Dataset& ds,
                                  std::span<const std::size_t> indices) {
  detail::Workspace ws(m.shape);
  std::vector<double> losses;
  losses.reserve(indices.size());
  for (std::size_t i : indices) {
    detail::forward(m, ds.row(i), ws);
    losses.push_back(detail::softmax_xent(ds.labels[i], ws));
  }
  return make_loss_report(std::move(losses));
}

struct TrainResult {
  ModelParams model;
  LossReport losses;
};

/// `h` steps of mini-batch SGD on the device's samples. Batches are drawn with
/// replacement from `rng`, so two consecutive calls sharing an engine equal a
/// single call with the summed step count.
inline TrainResult local_train(ModelParams model, const Dataset& ds,
                               std::span<const std::size_t> indices, int h,
                               std::size_t batch_size, double lr, Engine& rng) {
  if (h < 0) throw Error("local_train needs h >= 0");
  if (batch_size < 1) throw Error("local_train needs batch_size >= 1");
  if (!(lr >= 0.0)) throw Error("local_train needs lr >= 0");
  if (indices.empty()) throw NoDataError("local_train called with no samples");
  check_shape(model, ds);

  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  std::vector<std::size_t> batch(batch_size);
  std::vector<double> grad;
  for (int step = 0; step < h; ++step) {
    for (auto& b : batch) b = indices[pick(rng)];
    const double loss = loss_and_gradient(model, ds, batch, &grad);
    if (!std::isfinite(loss)) {
      throw DivergenceError("training loss became non-finite at step " + std::to_string(step) +
                            " (learning rate too large?)");
    }
    for (std::size_t k = 0; k < grad.size(); ++k) model.values[k] -= lr * grad[k];
  }
  for (double v : model.values) {
    if (!std::isfinite(v)) throw DivergenceError("model parameters became non-finite");
  }
  LossReport report = evaluate_losses(model, ds, indices);
  if (!std::isfinite(report.mean)) throw DivergenceError("post-training loss is non-finite");
  return {std::move(model), std::move(report)};
}

inline TrainResult local_train(ModelParams model, const Dataset& ds,
                               std::span<const std::size_t> indices, int h,
                               std::size_t batch_size, double lr, std::uint64_t seed) {
  Engine rng{seed};
  return local_train(std::move(model), ds, indices, h, batch_size, lr, rng);
}

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Argmax accuracy (exact ties go to the lowest class index) and mean loss.
inline Evaluation evaluate(const ModelParams& m, const Dataset& ds) {
  check_shape(m, ds);
  detail::Workspace ws(m.shape);
  std::size_t correct = 0;
  std::vector<double> losses(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    detail::forward(m, ds.row(i), ws);
    const auto best = static_cast<int>(
        std::max_element(ws.logits.begin(), ws.logits.end()) - ws.logits.begin());
    if (best == ds.labels[i]) ++correct;
    losses[i] = detail::softmax_xent(ds.labels[i], ws);
  }
  const double n = static_cast<double>(ds.size());
  return {static_cast<double>(correct) / n, pairwise_sum(losses) / n};
}

struct WeightedUpdate {
  const ModelParams* params = nullptr;
  double weight = 0.0;
};

/// FedAvg: element-wise mean weighted by local sample counts.
inline ModelParams aggregate(std::span<const WeightedUpdate> updates) {
  if (updates.empty()) throw AggregationError("aggregate needs at least one update");
  const ModelParams& first = *updates.front().params;
  std::vector<double> weights;
  weights.reserve(updates.size());
  for (const auto& u : updates) {
    if (u.params->shape != first.shape || u.params->values.size() != first.values.size()) {
      throw AggregationError("aggregate: update shapes differ");
    }
    if (!(u.weight > 0.0)) throw AggregationError("aggregate: weights must be positive");
    weights.push_back(u.weight);
  }
  const double total = pairwise_sum(weights);

  ModelParams out{first.shape, std::vector<double>(first.values.size())};
  std::vector<double> terms(updates.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    for (std::size_t u = 0; u < updates.size(); ++u) {
      terms[u] = updates[u].weight * updates[u].params->values[k];
    }
    out.values[k] = pairwise_sum(terms) / total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic loss trajectories.

/// Per-device loss curve floor + scale * exp(-decay * iterations).
struct LossCurve {
  double floor = 0.1;
  double scale = 1.0;
  double decay = 0.01;
};

inline double synthetic_mean_loss(const LossCurve& curve, double cumulative_iterations) {
  return curve.floor + curve.scale * std::exp(-curve.decay * cumulative_iterations);
}

inline LossReport synthetic_loss_backend(const LossCurve& curve,
                                         double cumulative_iterations,
                                         std::size_t samples) {
  const double mean = synthetic_mean_loss(curve, cumulative_iterations);
  LossReport r;
  r.per_sample.assign(samples, mean);
  r.mean = mean;
  return r;
}

}  // namespace rewafl
