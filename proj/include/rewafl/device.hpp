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

/// @file device.hpp
/// @brief Device hardware, battery and link models, and per-round cost
/// arithmetic.
///
/// A round's cost for device i splits into local computing (linear in the
/// number of local iterations) and uplink of the model update (size / rate at
/// a fixed transmit power). Downlink and reporting are free.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "rewafl/errors.hpp"
#include "rewafl/rng.hpp"

namespace rewafl {

using DeviceId = std::uint32_t;

struct LinkModel {
  double mean_rate_bps = 1e6;
  /// Relative half-width of the per-round uniform rate spread, in [0, 1).
  double jitter_fraction = 0.0;
  std::uint64_t seed_offset = 0;

  void validate() const {
    if (!(mean_rate_bps > 0.0) || !std::isfinite(mean_rate_bps)) {
      throw InvalidLinkError("link mean_rate must be positive, got " +
                             std::to_string(mean_rate_bps));
    }
    if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0)) {
      throw InvalidLinkError("link jitter_fraction must lie in [0, 1), got " +
                             std::to_string(jitter_fraction));
    }
  }
};

struct DeviceProfile {
  DeviceId id = 0;
  double per_iter_latency_s = 0.1;
  double per_iter_energy_j = 1.0;
  double tx_power_w = 1.0;
  double initial_energy_j = 0.0;
  double reserve_energy_j = 0.0;
  LinkModel link;

  void validate() const {
    auto fail = [this](const std::string& what) {
      throw Error("device " + std::to_string(id) + ": " + what);
    };
    if (!(per_iter_latency_s > 0.0)) fail("per_iter_latency must be > 0");
    if (!(per_iter_energy_j > 0.0)) fail("per_iter_energy must be > 0");
    if (!(tx_power_w >= 0.0)) fail("tx_power must be >= 0");
    if (!(reserve_energy_j >= 0.0)) fail("reserve_energy must be >= 0");
    if (!(initial_energy_j >= reserve_energy_j)) {
      fail("initial_energy must be >= reserve_energy");
    }
    link.validate();
  }
};

/// Mutable per-device state carried between rounds.
struct DeviceState {
  double residual_energy_j = 0.0;
  /// Committed local iteration count, always ceil(h_accumulator).
  int h = 1;
  /// Real-valued running sum H(i,0) + sum of psi * delta_h over selected
  /// rounds. Kept unrounded so repeated ceilings never compound.
  double h_accumulator = 1.0;
  int staleness = 0;
  bool frozen = false;
  bool dropped = false;
  std::optional<double> last_local_loss;
  std::optional<int> last_participation_round;
  double last_ecp_j = 0.0;

  static DeviceState initial(const DeviceProfile& profile, int h0) {
    DeviceState s;
    s.residual_energy_j = profile.initial_energy_j;
    s.h = h0;
    s.h_accumulator = static_cast<double>(h0);
    return s;
  }
};

struct ComputeCost {
  double latency_s = 0.0;
  double energy_j = 0.0;
};

struct CommCost {
  double latency_s = 0.0;
  double energy_j = 0.0;
};

/// Uplink rate of `link` in `round`, drawn from a stream keyed on
/// (seed, link.seed_offset, round).
inline double sample_rate(const LinkModel& link, int round, std::uint64_t seed) {
  if (link.jitter_fraction == 0.0) return link.mean_rate_bps;
  Engine rng = make_engine(seed, link.seed_offset,
                           static_cast<std::uint64_t>(round), StreamTag::link_rate);
  std::uniform_real_distribution<double> spread(-link.jitter_fraction,
                                                link.jitter_fraction);
  return link.mean_rate_bps * (1.0 + spread(rng));
}

inline ComputeCost compute_cost(const DeviceProfile& profile, int h) {
  const double iters = static_cast<double>(h);
  return {iters * profile.per_iter_latency_s, iters * profile.per_iter_energy_j};
}

inline CommCost comm_cost(double model_size_bits, double rate_bps, double tx_power_w) {
  if (!(rate_bps > 0.0)) {
    throw InvalidLinkError("transmission rate must be positive, got " +
                           std::to_string(rate_bps));
  }
  const double t = model_size_bits / rate_bps;
  return {t, tx_power_w * t};
}

/// How a battery overdraw is handled. `strict` is used under the
/// residual-energy-aware policy, whose gate must make an overdraw impossible.
enum class EnergyMode { strict, permissive };

/// Charge `total_energy_j` to a selected device.
inline DeviceState apply_participation(DeviceState state, const DeviceProfile& profile,
                                       double total_energy_j, int round,
                                       EnergyMode mode) {
  const double after = state.residual_energy_j - total_energy_j;
  if (after < profile.reserve_energy_j) {
    if (mode == EnergyMode::strict) {
      throw ReserveViolationError(
          "device " + std::to_string(profile.id) + " would fall below reserve in round " +
          std::to_string(round) + " (" + std::to_string(after) + " J < " +
          std::to_string(profile.reserve_energy_j) + " J)");
    }
    state.dropped = true;
  }
  state.residual_energy_j = after;
  state.staleness = 0;
  state.last_participation_round = round;
  return state;
}

}  // namespace rewafl
