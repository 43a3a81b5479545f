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

/// @file selection.hpp
/// @brief Participant-selection utilities and ranking.
///
/// The residual-energy-aware utility of device i in round r is
///
///   |B| * sqrt(mean(loss^2))            statistical utility
///   * (T / t)^alpha   if t > T, else 1  global latency utility
///   * (avail / e)^beta if e < avail      energy utility, avail = E - E0
///
/// and the energy factor is exactly zero otherwise, which removes the device
/// from the round. The Oort-style utility is the first two factors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rewafl/device.hpp"
#include "rewafl/errors.hpp"
#include "rewafl/rng.hpp"

namespace rewafl {

struct UtilityBreakdown {
  double statistical = 0.0;
  double latency_factor = 1.0;
  double energy_factor = 1.0;
  double total = 0.0;
  bool eligible = true;
};

struct SelectionDecision {
  int round = 0;
  /// Selected ids in rank order.
  std::vector<DeviceId> selected;
  std::map<DeviceId, UtilityBreakdown> per_device;
};

inline double statistical_utility(std::span<const double> losses) {
  if (losses.empty()) throw NoDataError("statistical utility of an empty loss vector");
  double sum_sq = 0.0;
  for (double l : losses) sum_sq += l * l;
  const double n = static_cast<double>(losses.size());
  return n * std::sqrt(sum_sq / n);
}

inline double latency_utility(double deadline_s, double latency_s, double alpha) {
  if (latency_s <= deadline_s) return 1.0;
  return std::pow(deadline_s / latency_s, alpha);
}

inline double energy_utility(double residual_j, double reserve_j, double energy_j,
                             double beta) {
  if (!(energy_j > 0.0)) {
    throw InvalidEstimateError("round energy estimate must be positive");
  }
  const double available = residual_j - reserve_j;
  if (energy_j < available) return std::pow(available / energy_j, beta);
  return 0.0;
}

struct RewaflInputs {
  std::span<const double> losses;
  double deadline_s = 1.0;
  double latency_s = 1.0;
  double alpha = 1.0;
  double residual_j = 0.0;
  double reserve_j = 0.0;
  double energy_j = 1.0;
  double beta = 1.0;
};

inline UtilityBreakdown rewafl_utility(const RewaflInputs& in) {
  UtilityBreakdown u;
  u.statistical = statistical_utility(in.losses);
  u.latency_factor = latency_utility(in.deadline_s, in.latency_s, in.alpha);
  u.energy_factor = energy_utility(in.residual_j, in.reserve_j, in.energy_j, in.beta);
  u.eligible = u.energy_factor > 0.0;
  u.total = u.eligible ? u.statistical * u.latency_factor * u.energy_factor : 0.0;
  return u;
}

inline double oort_utility(std::span<const double> losses, double deadline_s,
                           double latency_s, double alpha) {
  return statistical_utility(losses) * latency_utility(deadline_s, latency_s, alpha);
}

/// Additive exploration bonus weight * sqrt(rounds since last selection);
/// a device never selected counts from round 0.
inline double oort_staleness_bonus(double base, int current_round,
                                   std::optional<int> last_round, double weight) {
  const int gap = current_round - last_round.value_or(0);
  return base + weight * std::sqrt(static_cast<double>(std::max(gap, 0)));
}

/// Top-K by total utility, ties by ascending id; ineligible devices never make
/// the cut.
inline SelectionDecision select_top_k(std::map<DeviceId, UtilityBreakdown> per_device,
                                      std::size_t k, int round = 0) {
  std::vector<std::pair<DeviceId, double>> ranked;
  for (const auto& [id, u] : per_device) {
    if (u.eligible) ranked.emplace_back(id, u.total);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  SelectionDecision d;
  d.round = round;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) d.selected.push_back(ranked[i].first);
  d.per_device = std::move(per_device);
  return d;
}

/// The K devices with the smallest estimated round energy (AutoFL stand-in).
inline SelectionDecision energy_greedy_select(const std::map<DeviceId, double>& energy_j,
                                              const std::map<DeviceId, bool>& eligible,
                                              std::size_t k, int round = 0) {
  std::vector<std::pair<DeviceId, double>> ranked;
  for (const auto& [id, e] : energy_j) {
    auto it = eligible.find(id);
    if (it == eligible.end() || it->second) ranked.emplace_back(id, e);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  SelectionDecision d;
  d.round = round;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) d.selected.push_back(ranked[i].first);
  return d;
}

/// Uniform K-subset by partial Fisher-Yates; the result is listed in draw
/// order.
inline SelectionDecision random_select(std::vector<DeviceId> device_ids, std::size_t k,
                                       std::uint64_t seed, int round = 0) {
  std::sort(device_ids.begin(), device_ids.end());
  Engine rng = make_engine(seed, 0, static_cast<std::uint64_t>(round), StreamTag::random_select);
  const std::size_t take = std::min(k, device_ids.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, device_ids.size() - 1);
    std::swap(device_ids[i], device_ids[pick(rng)]);
  }
  device_ids.resize(take);
  SelectionDecision d;
  d.round = round;
  d.selected = std::move(device_ids);
  return d;
}

}  // namespace rewafl
