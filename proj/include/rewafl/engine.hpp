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

/// @file engine.hpp
/// @brief Synchronous round loop and run metrics.
///
/// Each round: every live device draws its uplink rate, sizes its local work
/// and estimates (t, e); the server scores and selects; selected devices
/// train; the server aggregates; every device applies its state transition.
/// Device-side steps run on a worker pool with per-device random streams, so
/// the output does not depend on the thread count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "rewafl/backend.hpp"
#include "rewafl/config.hpp"
#include "rewafl/device.hpp"
#include "rewafl/local_policy.hpp"
#include "rewafl/selection.hpp"

namespace rewafl {

/// Run fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct DeviceEstimate {
  DeviceId id = 0;
  double rate_bps = 0.0;
  int h = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double compute_energy_j = 0.0;
  double residual_j = 0.0;
  /// Present for the utility-ranked policies.
  std::optional<UtilityBreakdown> utility;
};

enum class EventKind { h_change, freeze, drop };

struct DeviceEvent {
  EventKind kind = EventKind::h_change;
  DeviceId id = 0;
  int h_before = 0;
  int h_after = 0;
  double residual_j = 0.0;
};

struct RoundRecord {
  int round = 0;
  /// In selection rank order.
  std::vector<DeviceId> selected;
  /// One entry per device alive at round start, in fleet order.
  std::vector<DeviceEstimate> estimates;
  double wallclock_s = 0.0;
  double energy_j = 0.0;
  double global_accuracy = 0.0;
  double global_loss = 0.0;
  std::vector<DeviceId> dropped_so_far;
  bool stalled = false;
  std::vector<DeviceEvent> events;
};

struct MetricsSummary {
  double dropout_ratio = 0.0;
  double overall_latency_s = 0.0;
  double overall_energy_j = 0.0;
  std::optional<int> rounds_to_target;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  int rounds_executed = 0;
};

/// Share of the fleet whose battery has fallen below its reserve.
inline double dropout_ratio(std::span<const DeviceState> states, std::size_t fleet_size) {
  if (fleet_size == 0) throw Error("dropout_ratio needs a non-empty fleet");
  const auto dropped = std::count_if(states.begin(), states.end(),
                                     [](const DeviceState& s) { return s.dropped; });
  return static_cast<double>(dropped) / static_cast<double>(fleet_size);
}

/// Longest run of consecutive rounds each device went unselected.
inline std::map<DeviceId, int> staleness_gap(std::span<const RoundRecord> records,
                                             std::span<const DeviceId> device_ids) {
  if (records.empty()) throw Error("staleness_gap needs at least one round");
  std::map<DeviceId, int> current;
  std::map<DeviceId, int> longest;
  for (DeviceId id : device_ids) current[id] = longest[id] = 0;
  for (const auto& rec : records) {
    for (DeviceId id : device_ids) {
      const bool chosen =
          std::find(rec.selected.begin(), rec.selected.end(), id) != rec.selected.end();
      current[id] = chosen ? 0 : current[id] + 1;
      longest[id] = std::max(longest[id], current[id]);
    }
  }
  return longest;
}

inline MetricsSummary summarize(std::span<const RoundRecord> records,
                                std::span<const DeviceState> states,
                                std::optional<double> target_accuracy) {
  MetricsSummary m;
  m.dropout_ratio = dropout_ratio(states, states.size());
  for (const auto& r : records) {
    m.overall_latency_s += r.wallclock_s;
    m.overall_energy_j += r.energy_j;
    if (target_accuracy && !m.rounds_to_target && r.global_accuracy >= *target_accuracy) {
      m.rounds_to_target = r.round;
    }
  }
  if (!records.empty()) {
    m.final_accuracy = records.back().global_accuracy;
    m.final_loss = records.back().global_loss;
  }
  m.rounds_executed = static_cast<int>(records.size());
  return m;
}

class Simulation {
 public:
  explicit Simulation(SimConfig config) : config_(std::move(config)) {
    validate(config_);
    init(make_backend(config_));
  }

  Simulation(SimConfig config, std::unique_ptr<LearningBackend> backend)
      : config_(std::move(config)) {
    validate(config_);
    init(std::move(backend));
  }

  const SimConfig& config() const noexcept { return config_; }
  const LearningBackend& backend() const noexcept { return *backend_; }
  const std::vector<DeviceState>& states() const noexcept { return states_; }
  const std::vector<LossReport>& cached_losses() const noexcept { return cached_losses_; }
  int next_round() const noexcept { return round_ + 1; }

  RoundRecord run_round() {
    const int round = ++round_;
    const auto& fleet = config_.fleet;
    const std::size_t n = fleet.size();

    // 1. Device-side estimates.
    struct Plan {
      bool alive = false;
      double rate = 0.0;
      double accumulator = 0.0;
      int h = 0;
      ComputeCost compute;
      CommCost comm;
    };
    std::vector<Plan> plans(n);
    const double model_bits = backend_->model_size_bits();
    parallel_for(n, config_.threads, [&](std::size_t i) {
      if (states_[i].dropped) return;
      Plan& p = plans[i];
      p.alive = true;
      p.rate = sample_rate(fleet[i].link, round, config_.seed);
      p.accumulator = tentative_accumulator(states_[i], p.rate, schedule_);
      p.h = tentative_h(states_[i], p.rate, schedule_);
      p.compute = compute_cost(fleet[i], p.h);
      p.comm = comm_cost(model_bits, p.rate, fleet[i].tx_power_w);
    });

    RoundRecord rec;
    rec.round = round;
    std::map<DeviceId, std::size_t> index_of;
    for (std::size_t i = 0; i < n; ++i) {
      if (!plans[i].alive) continue;
      index_of[fleet[i].id] = i;
      const auto& p = plans[i];
      DeviceEstimate est;
      est.id = fleet[i].id;
      est.rate_bps = p.rate;
      est.h = p.h;
      est.latency_s = p.compute.latency_s + p.comm.latency_s;
      est.energy_j = p.compute.energy_j + p.comm.energy_j;
      est.compute_energy_j = p.compute.energy_j;
      est.residual_j = states_[i].residual_energy_j;
      rec.estimates.push_back(est);
    }

    // 2. Server-side scoring and selection.
    SelectionDecision decision = select(round, rec.estimates, index_of);
    for (auto& est : rec.estimates) {
      auto it = decision.per_device.find(est.id);
      if (it != decision.per_device.end()) est.utility = it->second;
    }
    rec.selected = decision.selected;
    rec.stalled = rec.selected.empty();

    // 3. Local training on the selected devices.
    std::vector<std::size_t> chosen;
    for (DeviceId id : rec.selected) chosen.push_back(index_of.at(id));
    std::sort(chosen.begin(), chosen.end());
    std::vector<LocalOutcome> outcomes(chosen.size());
    parallel_for(chosen.size(), config_.threads, [&](std::size_t k) {
      outcomes[k] = backend_->train(chosen[k], plans[chosen[k]].h, round);
    });

    // 4. Aggregation.
    backend_->commit(outcomes);

    // 5. State transitions.
    std::vector<std::optional<Participation>> participation(n);
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      const std::size_t i = chosen[k];
      const auto& p = plans[i];
      participation[i] = Participation{round,           p.accumulator,
                                       p.compute,       p.comm,
                                       outcomes[k].losses.mean, outcomes[k].global_loss};
      rec.wallclock_s = std::max(rec.wallclock_s, p.compute.latency_s + p.comm.latency_s);
    }
    for (DeviceId id : rec.selected) {
      const auto& p = plans[index_of.at(id)];
      rec.energy_j += p.compute.energy_j + p.comm.energy_j;
    }
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      cached_losses_[chosen[k]] = std::move(outcomes[k].losses);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const DeviceState before = states_[i];
      states_[i] = update_on_decision(before, fleet[i], schedule_, participation[i], energy_mode_);
      const DeviceState& after = states_[i];
      if (after.h != before.h) {
        rec.events.push_back({EventKind::h_change, fleet[i].id, before.h, after.h,
                              after.residual_energy_j});
      }
      if (after.frozen && !before.frozen) {
        rec.events.push_back({EventKind::freeze, fleet[i].id, before.h, after.h,
                              after.residual_energy_j});
      }
      if (after.dropped && !before.dropped) {
        rec.events.push_back({EventKind::drop, fleet[i].id, before.h, after.h,
                              after.residual_energy_j});
      }
      if (after.dropped) rec.dropped_so_far.push_back(fleet[i].id);
    }

    // 6. Global evaluation.
    const GlobalEval ev = backend_->evaluate_global();
    rec.global_accuracy = ev.accuracy;
    rec.global_loss = ev.loss;
    return rec;
  }

 private:
  void init(std::unique_ptr<LearningBackend> backend) {
    backend_ = std::move(backend);
    if (backend_->devices() != config_.fleet.size()) {
      throw ConfigError("/backend", "backend device count does not match the fleet");
    }
    schedule_ = config_.schedule;
    schedule_.adaptive = config_.policy.uses_adaptive_h();
    energy_mode_ =
        config_.policy.kind == PolicyKind::rewafl ? EnergyMode::strict : EnergyMode::permissive;
    states_.reserve(config_.fleet.size());
    for (const auto& p : config_.fleet) states_.push_back(DeviceState::initial(p, schedule_.h0));
    // Every device scores the broadcast initial model once, at no cost, so
    // it has losses to report before it first trains.
    cached_losses_.resize(config_.fleet.size());
    parallel_for(config_.fleet.size(), config_.threads,
                 [&](std::size_t i) { cached_losses_[i] = backend_->initial_losses(i); });
  }

  SelectionDecision select(int round, const std::vector<DeviceEstimate>& estimates,
                           const std::map<DeviceId, std::size_t>& index_of) const {
    const auto& pol = config_.policy;
    switch (pol.kind) {
      case PolicyKind::rewafl: {
        std::map<DeviceId, UtilityBreakdown> scores;
        for (const auto& est : estimates) {
          const std::size_t i = index_of.at(est.id);
          RewaflInputs in;
          in.losses = cached_losses_[i].per_sample;
          in.deadline_s = pol.deadline_s;
          in.latency_s = est.latency_s;
          in.alpha = pol.alpha;
          in.residual_j = states_[i].residual_energy_j;
          in.reserve_j = config_.fleet[i].reserve_energy_j;
          in.energy_j = est.energy_j;
          in.beta = pol.beta;
          scores[est.id] = rewafl_utility(in);
        }
        return select_top_k(std::move(scores), pol.k, round);
      }
      case PolicyKind::oort: {
        std::map<DeviceId, UtilityBreakdown> scores;
        for (const auto& est : estimates) {
          const std::size_t i = index_of.at(est.id);
          UtilityBreakdown u;
          u.statistical = statistical_utility(cached_losses_[i].per_sample);
          u.latency_factor = latency_utility(pol.deadline_s, est.latency_s, pol.alpha);
          u.energy_factor = 1.0;
          u.total = oort_staleness_bonus(u.statistical * u.latency_factor, round,
                                         states_[i].last_participation_round,
                                         pol.staleness_weight);
          scores[est.id] = u;
        }
        return select_top_k(std::move(scores), pol.k, round);
      }
      case PolicyKind::random: {
        std::vector<DeviceId> ids;
        for (const auto& est : estimates) ids.push_back(est.id);
        return random_select(std::move(ids), pol.k, config_.seed, round);
      }
      case PolicyKind::energy_greedy: {
        std::map<DeviceId, double> energy;
        for (const auto& est : estimates) energy[est.id] = est.energy_j;
        return energy_greedy_select(energy, {}, pol.k, round);
      }
    }
    throw Error("unknown policy");
  }

  SimConfig config_;
  HSchedule schedule_;
  EnergyMode energy_mode_ = EnergyMode::permissive;
  std::unique_ptr<LearningBackend> backend_;
  std::vector<DeviceState> states_;
  std::vector<LossReport> cached_losses_;
  int round_ = 0;
};

struct SimulationResult {
  std::vector<RoundRecord> records;
  MetricsSummary summary;
  std::vector<DeviceState> final_states;
};

/// Run up to `config.rounds` rounds, stopping after the first round whose
/// held-out accuracy reaches `config.target_accuracy`.
inline SimulationResult run_simulation(const SimConfig& config) {
  Simulation sim(config);
  SimulationResult out;
  out.records.reserve(static_cast<std::size_t>(config.rounds));
  for (int r = 1; r <= config.rounds; ++r) {
    out.records.push_back(sim.run_round());
    if (config.target_accuracy && out.records.back().global_accuracy >= *config.target_accuracy) {
      break;
    }
  }
  out.final_states = sim.states();
  out.summary = summarize(out.records, out.final_states, config.target_accuracy);
  return out;
}

}  // namespace rewafl
