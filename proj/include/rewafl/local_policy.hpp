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

/// @file local_policy.hpp
/// @brief Wireless-aware local iteration schedule, freeze rule, and the
/// per-device state transition applied after every selection decision.
///
/// A device grows its local iteration count only in rounds where it is
/// selected, by psi(rate) * delta_h, with psi shrinking as the uplink gets
/// faster. Growth stops for good once the loss gained per joule of available
/// energy falls below the threshold.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "rewafl/device.hpp"
#include "rewafl/errors.hpp"

namespace rewafl {

struct HSchedule {
  int h0 = 5;
  double delta_h = 2.0;
  double psi_ref = 0.5;
  double rate_ref_bps = 1e7;
  double psi_max = 1.0;
  double epsilon_threshold = 0.01;
  /// false pins every device at h0 (the fixed local computing policy of the
  /// baselines); no growth and no freeze checks.
  bool adaptive = true;

  void validate() const {
    if (h0 < 1) throw Error("schedule h0 must be >= 1");
    if (!(delta_h > 0.0)) throw Error("schedule delta_h must be > 0");
    if (!(psi_ref > 0.0)) throw Error("schedule psi_ref must be > 0");
    if (!(rate_ref_bps > 0.0)) throw Error("schedule rate_ref must be > 0");
    if (!(psi_max > 0.0)) throw Error("schedule psi_max must be > 0");
    if (!(epsilon_threshold > 0.0)) throw Error("schedule epsilon_threshold must be > 0");
  }
};

/// min(psi_max, psi_ref * rate_ref / rate)
inline double psi(double rate_bps, const HSchedule& sched) {
  if (!(rate_bps > 0.0)) {
    throw InvalidRateError("psi needs a positive rate, got " + std::to_string(rate_bps));
  }
  return std::min(sched.psi_max, sched.psi_ref * sched.rate_ref_bps / rate_bps);
}

/// Accumulator after one selected round with the given psi value.
inline double advance_accumulator(const DeviceState& state, double psi_value,
                                  const HSchedule& sched) {
  if (!sched.adaptive || state.frozen) return state.h_accumulator;
  return state.h_accumulator + psi_value * sched.delta_h;
}

/// Accumulator value the device would commit if selected this round.
inline double tentative_accumulator(const DeviceState& state, double rate_bps,
                                    const HSchedule& sched) {
  if (!sched.adaptive || state.frozen) return state.h_accumulator;
  return advance_accumulator(state, psi(rate_bps, sched), sched);
}

inline int tentative_h_from_psi(const DeviceState& state, double psi_value,
                                const HSchedule& sched) {
  if (state.h < 1) throw Error("device state h must be >= 1");
  if (!sched.adaptive || state.frozen) return state.h;
  return static_cast<int>(std::ceil(advance_accumulator(state, psi_value, sched)));
}

inline int tentative_h(const DeviceState& state, double rate_bps, const HSchedule& sched) {
  if (state.h < 1) throw Error("device state h must be >= 1");
  if (!sched.adaptive || state.frozen) return state.h;
  return tentative_h_from_psi(state, psi(rate_bps, sched), sched);
}

/// |L_local - L_global| * max(0, E_last - E0) / e_cp_last
inline double freeze_metric(double loss_last_local, double loss_global_prev,
                            double residual_at_last_j, double reserve_j, double ecp_at_last_j) {
  if (!(ecp_at_last_j > 0.0)) {
    throw InvalidHistoryError("freeze metric needs a positive computing energy from a "
                              "previous participation");
  }
  const double available = std::max(0.0, residual_at_last_j - reserve_j);
  return std::abs(loss_last_local - loss_global_prev) * available / ecp_at_last_j;
}

/// What a selected device did this round.
struct Participation {
  int round = 0;
  /// Accumulator the committed h was taken from (ceil gives the h).
  double accumulator = 0.0;
  ComputeCost compute;
  CommCost comm;
  /// Mean loss of the freshly trained local model on the local data.
  double local_loss = 0.0;
  /// Mean loss of the received global model on the same data.
  double global_loss = 0.0;
};

inline DeviceState update_on_decision(DeviceState state, const DeviceProfile& profile,
                                      const HSchedule& sched,
                                      const std::optional<Participation>& participation,
                                      EnergyMode mode) {
  if (!participation) {
    state.staleness += 1;
    return state;
  }
  const auto& p = *participation;
  state = apply_participation(std::move(state), profile,
                              p.compute.energy_j + p.comm.energy_j, p.round, mode);
  if (sched.adaptive && !state.frozen) {
    if (p.accumulator < state.h_accumulator) {
      throw Error("committed h accumulator may not decrease");
    }
    state.h_accumulator = p.accumulator;
    state.h = static_cast<int>(std::ceil(state.h_accumulator));
  }
  state.last_local_loss = p.local_loss;
  state.last_ecp_j = p.compute.energy_j;
  if (sched.adaptive && !state.frozen && p.compute.energy_j > 0.0) {
    const double eps = freeze_metric(p.local_loss, p.global_loss, state.residual_energy_j,
                                     profile.reserve_energy_j, p.compute.energy_j);
    if (eps < sched.epsilon_threshold) state.frozen = true;
  }
  return state;
}

}  // namespace rewafl
