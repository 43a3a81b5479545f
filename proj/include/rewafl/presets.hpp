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

/// @file presets.hpp
/// @brief Named scenarios.
///
/// The archetype costs below are synthetic calibration constants. They are
/// shaped like a mixed phone/tablet/laptop fleet but are not measurements of
/// any real device.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rewafl/config.hpp"
#include "rewafl/errors.hpp"
#include "rewafl/rng.hpp"

namespace rewafl {

struct Archetype {
  std::string_view name;
  double rate_low_bps;
  double rate_high_bps;
  double per_iter_latency_s;
  double per_iter_energy_j;
  double tx_power_w;
  double capacity_j;
};

inline constexpr std::array<Archetype, 5> kArchetypes{{
    {"flagship", 10e6, 79.60e6, 1.5, 8.0, 1.2, 62.7e3},
    {"midrange", 5e6, 45.0e6, 2.5, 10.0, 1.5, 69.7e3},
    {"budget", 0.64e6, 8e6, 4.0, 12.0, 2.0, 69.7e3},
    {"tablet", 3e6, 30e6, 3.0, 14.0, 1.6, 97.5e3},
    {"laptop", 6e6, 60e6, 0.8, 25.0, 1.0, 208.8e3},
}};

inline std::vector<std::string> preset_names() {
  return {"paper-fleet", "paper-fleet-tight", "two-device-staleness", "mini-trainer"};
}

namespace detail {

/// 100 devices, 20 per archetype, synthetic loss curves.
inline SimConfig archetype_fleet(std::uint64_t seed, double battery_scale, int rounds) {
  SimConfig c;
  c.seed = seed;
  c.rounds = rounds;
  c.policy.kind = PolicyKind::rewafl;
  c.policy.k = 20;
  c.policy.deadline_s = 60.0;

  Engine rng = make_engine(seed, 0, 0, StreamTag::fleet);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SyntheticBackendConfig backend;
  backend.model_size_bits = 53.2e6;

  constexpr int kPerArchetype = 20;
  DeviceId id = 0;
  for (const auto& a : kArchetypes) {
    for (int j = 0; j < kPerArchetype; ++j, ++id) {
      DeviceProfile d;
      d.id = id;
      d.per_iter_latency_s = a.per_iter_latency_s;
      d.per_iter_energy_j = a.per_iter_energy_j;
      d.tx_power_w = a.tx_power_w;
      // Log-spaced mean rates; the first and last device of each archetype
      // sit on its endpoints.
      const double t = static_cast<double>(j) / (kPerArchetype - 1);
      d.link.mean_rate_bps = a.rate_high_bps * std::pow(a.rate_low_bps / a.rate_high_bps, t);
      d.link.jitter_fraction = 0.3;
      d.link.seed_offset = id;
      const double cap = a.capacity_j * battery_scale;
      double e = 0.0;
      do {
        e = cap * (0.5 + 0.25 * gauss(rng));
      } while (e < 0.1 * cap || e > cap);
      d.initial_energy_j = e;
      d.reserve_energy_j = 0.05 * cap;
      c.fleet.push_back(d);

      LossCurve curve;
      curve.floor = 0.05 + 0.25 * unit(rng);
      curve.scale = 1.5 + unit(rng);
      curve.decay = 0.002 + 0.008 * unit(rng);
      backend.curves.push_back(curve);
      backend.samples.push_back(300 + static_cast<std::size_t>(unit(rng) * 600.0));
    }
  }
  c.backend = backend;
  return c;
}

inline SimConfig two_device_staleness(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.rounds = 100;
  c.policy.kind = PolicyKind::rewafl;
  c.policy.k = 1;
  c.policy.deadline_s = 60.0;
  c.schedule.h0 = 5;
  c.schedule.delta_h = 2.0;
  c.schedule.psi_ref = 0.5;
  c.schedule.rate_ref_bps = 10e6;

  SyntheticBackendConfig backend;
  backend.model_size_bits = 10e6;
  for (DeviceId id : {0u, 1u}) {
    DeviceProfile d;
    d.id = id;
    d.per_iter_latency_s = 2.0;
    d.per_iter_energy_j = 10.0;
    d.tx_power_w = 1.5;
    d.initial_energy_j = 50e3;
    d.reserve_energy_j = 2.5e3;
    // Device 0 is i (fast link, psi 0.125), device 1 is j (psi capped at 1).
    d.link.mean_rate_bps = id == 0 ? 40e6 : 2e6;
    d.link.jitter_fraction = 0.0;
    d.link.seed_offset = id;
    c.fleet.push_back(d);
    backend.curves.push_back({0.1, 2.0, 0.01});
    backend.samples.push_back(600);
  }
  c.backend = backend;
  return c;
}

inline SimConfig mini_trainer(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.rounds = 100;
  c.target_accuracy = 0.95;
  c.policy.kind = PolicyKind::rewafl;
  c.policy.k = 5;
  c.policy.deadline_s = 60.0;

  TrainerBackendConfig tr;
  tr.arch = Architecture::logistic;
  SyntheticDataSpec data;
  data.classes = 3;
  data.dims = 2;
  data.train_n = 3000;
  data.test_n = 600;
  data.cluster_spread = 0.1;
  tr.data = data;
  tr.lambda = 0.8;
  tr.samples_per_device = 100;
  tr.batch_size = 16;
  tr.lr = 0.5;
  c.backend = tr;

  Engine rng = make_engine(seed, 0, 0, StreamTag::fleet);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (DeviceId id = 0; id < 20; ++id) {
    DeviceProfile d;
    d.id = id;
    d.per_iter_latency_s = 0.5 + unit(rng);
    d.per_iter_energy_j = 2.0 + 4.0 * unit(rng);
    d.tx_power_w = 1.0;
    d.initial_energy_j = 20e3 + 20e3 * unit(rng);
    d.reserve_energy_j = 2e3;
    d.link.mean_rate_bps = 1e6 * std::pow(50.0, unit(rng));
    d.link.jitter_fraction = 0.2;
    d.link.seed_offset = id;
    c.fleet.push_back(d);
  }
  return c;
}

}  // namespace detail

/// Build a named scenario. Throws UnknownPresetError for unknown names.
inline SimConfig preset(std::string_view name, std::uint64_t seed = 1) {
  SimConfig c;
  if (name == "paper-fleet") c = detail::archetype_fleet(seed, 1.0, 300);
  else if (name == "paper-fleet-tight") c = detail::archetype_fleet(seed, 0.15, 200);
  else if (name == "two-device-staleness") c = detail::two_device_staleness(seed);
  else if (name == "mini-trainer") c = detail::mini_trainer(seed);
  else throw UnknownPresetError("unknown preset '" + std::string(name) + "'");
  validate(c);
  return c;
}

}  // namespace rewafl
