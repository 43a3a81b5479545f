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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rewafl/device.hpp"
#include "rewafl/errors.hpp"
#include "rewafl/local_policy.hpp"
#include "rewafl/trainer.hpp"

namespace rewafl {

enum class PolicyKind { rewafl, oort, random, energy_greedy };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::rewafl: return "rewafl";
    case PolicyKind::oort: return "oort";
    case PolicyKind::random: return "random";
    case PolicyKind::energy_greedy: return "energy-greedy";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  if (name == "rewafl") return PolicyKind::rewafl;
  if (name == "oort") return PolicyKind::oort;
  if (name == "random") return PolicyKind::random;
  if (name == "energy-greedy") return PolicyKind::energy_greedy;
  return std::nullopt;
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::rewafl;
  std::size_t k = 1;
  double alpha = 1.0;
  double beta = 1.0;
  /// Developer-preferred round duration T, seconds.
  double deadline_s = 60.0;
  /// Oort temporal-uncertainty weight.
  double staleness_weight = 0.0;
  /// Overrides the default local computing policy: adaptive for rewafl,
  /// fixed h0 for the baselines.
  std::optional<bool> adaptive_h;

  bool uses_adaptive_h() const { return adaptive_h.value_or(kind == PolicyKind::rewafl); }
};

/// Synthetic loss backend: one loss curve and sample count per device, in
/// fleet order.
struct SyntheticBackendConfig {
  std::vector<LossCurve> curves;
  std::vector<std::size_t> samples;
  double model_size_bits = 1e6;
};

struct SyntheticDataSpec {
  int classes = 3;
  std::size_t dims = 2;
  std::size_t train_n = 2000;
  std::size_t test_n = 500;
  double cluster_spread = 0.1;
};

struct IdxDataSpec {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

enum class Architecture { logistic, mlp };

struct TrainerBackendConfig {
  Architecture arch = Architecture::logistic;
  std::size_t hidden = 32;
  std::variant<SyntheticDataSpec, IdxDataSpec> data = SyntheticDataSpec{};
  double lambda = 0.8;
  /// 0 means train_n / fleet size.
  std::size_t samples_per_device = 0;
  std::size_t batch_size = 16;
  double lr = 0.1;
  /// Defaults to parameter count x 32.
  std::optional<double> model_size_bits;
};

using BackendConfig = std::variant<SyntheticBackendConfig, TrainerBackendConfig>;

struct SimConfig {
  std::vector<DeviceProfile> fleet;
  PolicyConfig policy;
  HSchedule schedule;
  BackendConfig backend = SyntheticBackendConfig{};
  int rounds = 1;
  std::optional<double> target_accuracy;
  std::uint64_t seed = 1;
  /// Worker threads for device-side work; results do not depend on it.
  std::size_t threads = 1;
};

/// Semantic checks; throws ConfigError naming the offending field.
inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& path, const std::string& msg) {
    throw ConfigError(path, msg);
  };
  if (c.rounds < 1) fail("/rounds", "must be >= 1, got " + std::to_string(c.rounds));
  if (c.threads < 1) fail("/threads", "must be >= 1");
  if (c.fleet.empty()) fail("/fleet", "must contain at least one device");
  if (c.policy.k < 1) fail("/policy/k", "must be >= 1");
  if (c.policy.k > c.fleet.size()) {
    fail("/policy/k", "K=" + std::to_string(c.policy.k) + " exceeds fleet size " +
                          std::to_string(c.fleet.size()));
  }
  if (!(c.policy.alpha >= 0.0)) fail("/policy/alpha", "must be >= 0");
  if (!(c.policy.beta >= 0.0)) fail("/policy/beta", "must be >= 0");
  if (!(c.policy.deadline_s > 0.0)) fail("/policy/deadline_s", "must be > 0");
  if (!(c.policy.staleness_weight >= 0.0)) fail("/policy/staleness_weight", "must be >= 0");
  if (c.target_accuracy && !(*c.target_accuracy >= 0.0 && *c.target_accuracy <= 1.0)) {
    fail("/target_accuracy", "must lie in [0, 1]");
  }
  try {
    c.schedule.validate();
  } catch (const Error& e) {
    fail("/schedule", e.what());
  }
  std::set<DeviceId> ids;
  for (std::size_t i = 0; i < c.fleet.size(); ++i) {
    const std::string path = "/fleet/" + std::to_string(i);
    try {
      c.fleet[i].validate();
    } catch (const Error& e) {
      fail(path, e.what());
    }
    if (!ids.insert(c.fleet[i].id).second) {
      fail(path + "/id", "duplicate device id " + std::to_string(c.fleet[i].id));
    }
  }

  if (const auto* syn = std::get_if<SyntheticBackendConfig>(&c.backend)) {
    if (syn->curves.size() != c.fleet.size()) {
      fail("/backend/devices", "needs one entry per fleet device (" +
                                   std::to_string(c.fleet.size()) + "), got " +
                                   std::to_string(syn->curves.size()));
    }
    if (syn->samples.size() != syn->curves.size()) fail("/backend/devices", "inconsistent lengths");
    for (std::size_t i = 0; i < syn->curves.size(); ++i) {
      const std::string path = "/backend/devices/" + std::to_string(i);
      const auto& lc = syn->curves[i];
      if (!(lc.floor >= 0.0)) fail(path + "/floor", "must be >= 0");
      if (!(lc.scale > 0.0)) fail(path + "/scale", "must be > 0");
      if (!(lc.decay > 0.0)) fail(path + "/decay", "must be > 0");
      if (syn->samples[i] < 1) fail(path + "/samples", "must be >= 1");
    }
    if (!(syn->model_size_bits >= 0.0)) fail("/backend/model_size_bits", "must be >= 0");
  } else {
    const auto& tr = std::get<TrainerBackendConfig>(c.backend);
    if (!(tr.lambda >= 0.0 && tr.lambda <= 1.0)) {
      fail("/backend/partition/lambda", "must lie in [0, 1], got " + std::to_string(tr.lambda));
    }
    if (tr.batch_size < 1) fail("/backend/batch_size", "must be >= 1");
    if (!(tr.lr > 0.0)) fail("/backend/lr", "must be > 0");
    if (tr.arch == Architecture::mlp && tr.hidden < 1) fail("/backend/model/hidden", "must be >= 1");
    if (tr.model_size_bits && !(*tr.model_size_bits >= 0.0)) {
      fail("/backend/model_size_bits", "must be >= 0");
    }
    if (const auto* s = std::get_if<SyntheticDataSpec>(&tr.data)) {
      if (s->classes < 2) fail("/backend/dataset/classes", "must be >= 2");
      if (s->dims < 1) fail("/backend/dataset/dims", "must be >= 1");
      if (s->train_n < c.fleet.size()) fail("/backend/dataset/train_n", "must be >= fleet size");
      if (s->test_n < 1) fail("/backend/dataset/test_n", "must be >= 1");
      if (!(s->cluster_spread >= 0.0)) fail("/backend/dataset/cluster_spread", "must be >= 0");
    }
  }
}

}  // namespace rewafl
