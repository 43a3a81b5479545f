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

// Shared scenario builders for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>

#include "rewafl/config.hpp"

namespace rewafl::testing {

/// Random heterogeneous fleet on the synthetic backend.
inline SimConfig random_fleet(std::uint64_t seed, std::size_t devices, int rounds,
                              PolicyKind policy = PolicyKind::rewafl) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SimConfig c;
  c.seed = seed;
  c.rounds = rounds;
  c.policy.kind = policy;
  c.policy.k = std::max<std::size_t>(1, devices / 5);
  c.policy.deadline_s = 30.0;
  c.policy.staleness_weight = policy == PolicyKind::oort ? 1.0 : 0.0;
  SyntheticBackendConfig backend;
  backend.model_size_bits = 1e6 + 2e7 * u(rng);
  for (std::size_t i = 0; i < devices; ++i) {
    DeviceProfile d;
    d.id = static_cast<DeviceId>(i);
    d.per_iter_latency_s = 0.1 + 3.0 * u(rng);
    d.per_iter_energy_j = 0.5 + 20.0 * u(rng);
    d.tx_power_w = 0.5 + 1.5 * u(rng);
    const double cap = 500.0 + 20000.0 * u(rng);
    d.reserve_energy_j = 0.1 * cap * u(rng);
    d.initial_energy_j = d.reserve_energy_j + cap * u(rng);
    d.link.mean_rate_bps = 5e5 * std::pow(160.0, u(rng));
    d.link.jitter_fraction = 0.4 * u(rng);
    d.link.seed_offset = i;
    c.fleet.push_back(d);
    backend.curves.push_back({0.3 * u(rng), 0.5 + 2.0 * u(rng), 0.001 + 0.02 * u(rng)});
    backend.samples.push_back(50 + static_cast<std::size_t>(900.0 * u(rng)));
  }
  c.backend = backend;
  return c;
}

}  // namespace rewafl::testing
