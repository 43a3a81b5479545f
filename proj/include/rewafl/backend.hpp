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

/// @file backend.hpp
/// @brief Learning backends driven by the round engine.
///
/// The engine only needs per-device losses, a way to train selected devices
/// and fold their updates into the global model, and a global evaluation.
/// `TrainerBackend` does that with the real mini-trainer; `SyntheticBackend`
/// replaces training with closed-form loss curves so large property sweeps
/// stay fast.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "rewafl/config.hpp"
#include "rewafl/dataset.hpp"
#include "rewafl/trainer.hpp"

namespace rewafl {

struct LocalOutcome {
  std::size_t device = 0;
  ModelParams update;
  /// Post-training per-sample losses on the device's data.
  LossReport losses;
  /// Mean loss of the model the device received, on the same data.
  double global_loss = 0.0;
};

struct GlobalEval {
  double accuracy = 0.0;
  double loss = 0.0;
};

class LearningBackend {
 public:
  virtual ~LearningBackend() = default;

  virtual std::size_t devices() const = 0;
  virtual std::size_t sample_count(std::size_t device) const = 0;
  virtual double model_size_bits() const = 0;
  /// Losses of the broadcast initial model on the device's data.
  virtual LossReport initial_losses(std::size_t device) const = 0;
  /// Must be safe to call concurrently for distinct devices.
  virtual LocalOutcome train(std::size_t device, int h, int round) const = 0;
  /// Fold this round's outcomes (in fleet order) into the global model.
  virtual void commit(std::span<const LocalOutcome> outcomes) = 0;
  virtual GlobalEval evaluate_global() const = 0;
};

class SyntheticBackend final : public LearningBackend {
 public:
  explicit SyntheticBackend(SyntheticBackendConfig cfg)
      : cfg_(std::move(cfg)), cumulative_(cfg_.curves.size(), 0.0) {}

  std::size_t devices() const override { return cfg_.curves.size(); }
  std::size_t sample_count(std::size_t device) const override { return cfg_.samples[device]; }
  double model_size_bits() const override { return cfg_.model_size_bits; }

  LossReport initial_losses(std::size_t device) const override {
    return synthetic_loss_backend(cfg_.curves[device], 0.0, cfg_.samples[device]);
  }

  LocalOutcome train(std::size_t device, int h, int /*round*/) const override {
    const auto& curve = cfg_.curves[device];
    const double before = cumulative_[device];
    const double after = before + static_cast<double>(h);
    LocalOutcome out;
    out.device = device;
    out.update.values = {after};
    out.losses = synthetic_loss_backend(curve, after, cfg_.samples[device]);
    out.global_loss = synthetic_mean_loss(curve, before);
    return out;
  }

  void commit(std::span<const LocalOutcome> outcomes) override {
    for (const auto& o : outcomes) cumulative_[o.device] = o.update.values.at(0);
  }

  /// Sample-weighted fleet loss; accuracy proxy is the weighted mean of
  /// 1 - exp(-decay * iterations), so untrained or dropped devices hold it
  /// down.
  GlobalEval evaluate_global() const override {
    double total = 0.0;
    double loss = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < cfg_.curves.size(); ++i) {
      const auto w = static_cast<double>(cfg_.samples[i]);
      total += w;
      loss += w * synthetic_mean_loss(cfg_.curves[i], cumulative_[i]);
      acc += w * (1.0 - std::exp(-cfg_.curves[i].decay * cumulative_[i]));
    }
    return {acc / total, loss / total};
  }

  double cumulative_iterations(std::size_t device) const { return cumulative_[device]; }

 private:
  SyntheticBackendConfig cfg_;
  std::vector<double> cumulative_;
};

class TrainerBackend final : public LearningBackend {
 public:
  TrainerBackend(const TrainerBackendConfig& cfg, std::size_t fleet_size, std::uint64_t seed)
      : cfg_(cfg), seed_(seed) {
    if (const auto* s = std::get_if<SyntheticDataSpec>(&cfg.data)) {
      auto all = generate_synthetic(s->classes, s->dims, s->train_n + s->test_n,
                                    s->cluster_spread, seed);
      std::tie(train_, test_) = split_holdout(all, s->test_n, seed);
    } else {
      const auto& idx = std::get<IdxDataSpec>(cfg.data);
      train_ = load_idx(idx.train_images, idx.train_labels);
      test_ = load_idx(idx.test_images, idx.test_labels);
      const int classes = std::max(train_.classes, test_.classes);
      train_.classes = test_.classes = classes;
      if (train_.dims != test_.dims) throw Error("IDX train and test dimensions differ");
    }
    partition_ = partition_label_skew(train_, fleet_size, cfg.lambda, seed,
                                      cfg.samples_per_device);
    ModelShape shape{train_.dims, cfg.arch == Architecture::mlp ? cfg.hidden : 0,
                     static_cast<std::size_t>(train_.classes)};
    global_ = init_model(shape, seed);
  }

  std::size_t devices() const override { return partition_.devices(); }
  std::size_t sample_count(std::size_t device) const override {
    return partition_.assignments[device].size();
  }
  double model_size_bits() const override {
    return cfg_.model_size_bits.value_or(
        static_cast<double>(global_.shape.parameter_count()) * 32.0);
  }

  LossReport initial_losses(std::size_t device) const override {
    return evaluate_losses(global_, train_, partition_.assignments[device]);
  }

  LocalOutcome train(std::size_t device, int h, int round) const override {
    const auto& mine = partition_.assignments[device];
    LocalOutcome out;
    out.device = device;
    out.global_loss = evaluate_losses(global_, train_, mine).mean;
    Engine rng = make_engine(seed_, device, static_cast<std::uint64_t>(round),
                             StreamTag::local_train);
    auto trained = local_train(global_, train_, mine, h, cfg_.batch_size, cfg_.lr, rng);
    out.update = std::move(trained.model);
    out.losses = std::move(trained.losses);
    return out;
  }

  void commit(std::span<const LocalOutcome> outcomes) override {
    if (outcomes.empty()) return;
    std::vector<WeightedUpdate> updates;
    updates.reserve(outcomes.size());
    for (const auto& o : outcomes) {
      updates.push_back({&o.update, static_cast<double>(sample_count(o.device))});
    }
    global_ = aggregate(updates);
  }

  GlobalEval evaluate_global() const override {
    const auto ev = evaluate(global_, test_);
    return {ev.accuracy, ev.mean_loss};
  }

  const ModelParams& global_model() const { return global_; }
  const Dataset& train_set() const { return train_; }
  const Dataset& test_set() const { return test_; }
  const Partition& partition() const { return partition_; }

 private:
  TrainerBackendConfig cfg_;
  std::uint64_t seed_;
  Dataset train_;
  Dataset test_;
  Partition partition_;
  ModelParams global_;
};

inline std::unique_ptr<LearningBackend> make_backend(const SimConfig& config) {
  if (const auto* syn = std::get_if<SyntheticBackendConfig>(&config.backend)) {
    return std::make_unique<SyntheticBackend>(*syn);
  }
  return std::make_unique<TrainerBackend>(std::get<TrainerBackendConfig>(config.backend),
                                          config.fleet.size(), config.seed);
}

}  // namespace rewafl
