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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "rewafl/engine.hpp"
#include "rewafl/output.hpp"
#include "rewafl/presets.hpp"
#include "support.hpp"

namespace rewafl {
namespace {

using rewafl::testing::random_fleet;

DeviceProfile flat_device(DeviceId id, double energy_per_iter, double initial, double reserve) {
  DeviceProfile d;
  d.id = id;
  d.per_iter_latency_s = 1.0;
  d.per_iter_energy_j = energy_per_iter;
  d.tx_power_w = 1.0;
  d.initial_energy_j = initial;
  d.reserve_energy_j = reserve;
  d.link.mean_rate_bps = 1e6;
  d.link.seed_offset = id;
  return d;
}

SimConfig scripted(std::vector<DeviceProfile> fleet, std::vector<LossCurve> curves,
                   std::size_t k) {
  SimConfig c;
  c.rounds = 1;
  c.policy.kind = PolicyKind::rewafl;
  c.policy.k = k;
  c.policy.deadline_s = 100.0;
  c.policy.adaptive_h = false;
  c.schedule.h0 = 1;
  SyntheticBackendConfig b;
  b.model_size_bits = 0.0;
  for (const auto& lc : curves) {
    b.curves.push_back(lc);
    b.samples.push_back(10);
  }
  c.fleet = std::move(fleet);
  c.backend = b;
  return c;
}

TEST(RunRound, SingleEligibleDeviceIsSelected) {
  auto c = scripted({flat_device(0, 1.0, 100.0, 0.0)}, {{0.1, 1.0, 0.01}}, 1);
  Simulation sim(c);
  const auto rec = sim.run_round();
  EXPECT_EQ(rec.selected, (std::vector<DeviceId>{0}));
  EXPECT_FALSE(rec.stalled);
  EXPECT_EQ(rec.round, 1);
}

TEST(RunRound, FullyGatedRoundStalls) {
  auto c = scripted({flat_device(0, 10.0, 15.0, 5.0), flat_device(1, 50.0, 40.0, 0.0)},
                    {{0.1, 1.0, 0.01}, {0.1, 1.0, 0.01}}, 2);
  auto backend = std::make_unique<SyntheticBackend>(std::get<SyntheticBackendConfig>(c.backend));
  const auto* view = backend.get();
  Simulation sim(c, std::move(backend));
  const auto before = sim.backend().evaluate_global();
  const auto rec = sim.run_round();
  EXPECT_TRUE(rec.stalled);
  EXPECT_TRUE(rec.selected.empty());
  EXPECT_EQ(rec.energy_j, 0.0);
  EXPECT_EQ(rec.wallclock_s, 0.0);
  EXPECT_EQ(view->cumulative_iterations(0), 0.0);
  EXPECT_EQ(view->cumulative_iterations(1), 0.0);
  EXPECT_EQ(rec.global_loss, before.loss);
  for (const auto& s : sim.states()) EXPECT_EQ(s.staleness, 1);
}

// Estimated energies 2, 5 and 20 J against 10 J available each.
TEST(RunRound, ScriptedThreeDeviceRound) {
  const std::vector<LossCurve> curves{{0.0, 1.0, 0.01}, {0.0, 3.0, 0.01}, {0.0, 9.0, 0.01}};
  auto c = scripted({flat_device(0, 2.0, 30.0, 20.0), flat_device(1, 5.0, 30.0, 20.0),
                     flat_device(2, 20.0, 30.0, 20.0)},
                    curves, 1);
  Simulation sim(c);
  const auto rec = sim.run_round();
  ASSERT_EQ(rec.estimates.size(), 3u);
  EXPECT_DOUBLE_EQ(rec.estimates[0].energy_j, 2.0);
  EXPECT_DOUBLE_EQ(rec.estimates[1].energy_j, 5.0);
  EXPECT_DOUBLE_EQ(rec.estimates[2].energy_j, 20.0);
  // 10 samples each at loss scale: utilities 10 * 1 * 10/2 = 50 and
  // 10 * 3 * 10/5 = 60; device 2 is gated.
  EXPECT_NEAR(rec.estimates[0].utility->total, 50.0, 1e-9);
  EXPECT_NEAR(rec.estimates[1].utility->total, 60.0, 1e-9);
  EXPECT_FALSE(rec.estimates[2].utility->eligible);
  EXPECT_EQ(rec.selected, (std::vector<DeviceId>{1}));
}

TEST(RunRound, WallclockIsMaxAndEnergyIsSumOverSelected) {
  auto c = random_fleet(5, 30, 20);
  Simulation sim(c);
  for (int r = 0; r < 20; ++r) {
    const auto rec = sim.run_round();
    double wall = 0.0;
    double energy = 0.0;
    for (const auto& e : rec.estimates) {
      if (std::find(rec.selected.begin(), rec.selected.end(), e.id) == rec.selected.end()) continue;
      wall = std::max(wall, e.latency_s);
      energy += e.energy_j;
    }
    EXPECT_DOUBLE_EQ(rec.wallclock_s, wall);
    EXPECT_NEAR(rec.energy_j, energy, 1e-9 * (1.0 + energy));
  }
}

TEST(RunRound, StateTransitionsFollowSelection) {
  auto c = random_fleet(8, 25, 40);
  Simulation sim(c);
  auto prev = sim.states();
  for (int r = 0; r < 40; ++r) {
    const auto rec = sim.run_round();
    const std::set<DeviceId> chosen(rec.selected.begin(), rec.selected.end());
    for (std::size_t i = 0; i < c.fleet.size(); ++i) {
      const auto& now = sim.states()[i];
      EXPECT_LE(now.residual_energy_j, prev[i].residual_energy_j);
      EXPECT_GE(now.h, prev[i].h);
      if (prev[i].frozen) {
        EXPECT_TRUE(now.frozen);
        EXPECT_EQ(now.h, prev[i].h);
      }
      if (chosen.count(c.fleet[i].id)) {
        EXPECT_EQ(now.staleness, 0);
      } else {
        EXPECT_EQ(now.staleness, prev[i].staleness + 1);
        EXPECT_EQ(now.h, prev[i].h);
        EXPECT_EQ(now.residual_energy_j, prev[i].residual_energy_j);
      }
    }
    prev = sim.states();
  }
}

TEST(RunSimulation, RewaflNeverDrops) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto res = run_simulation(random_fleet(seed, 40, 150));
    EXPECT_EQ(res.summary.dropout_ratio, 0.0);
    for (std::size_t i = 0; i < res.final_states.size(); ++i) {
      EXPECT_GE(res.final_states[i].residual_energy_j,
                random_fleet(seed, 40, 150).fleet[i].reserve_energy_j);
    }
  }
}

TEST(RunSimulation, EnergyConservationUnderEveryPolicy) {
  for (auto kind : {PolicyKind::rewafl, PolicyKind::oort, PolicyKind::random,
                    PolicyKind::energy_greedy}) {
    const auto c = random_fleet(21, 30, 120, kind);
    const auto res = run_simulation(c);
    std::map<DeviceId, double> spent;
    for (const auto& rec : res.records) {
      for (const auto& e : rec.estimates) {
        if (std::find(rec.selected.begin(), rec.selected.end(), e.id) != rec.selected.end()) {
          spent[e.id] += e.energy_j;
        }
      }
    }
    for (std::size_t i = 0; i < c.fleet.size(); ++i) {
      const double used = c.fleet[i].initial_energy_j - res.final_states[i].residual_energy_j;
      EXPECT_NEAR(used, spent[c.fleet[i].id], 1e-9 * (1.0 + c.fleet[i].initial_energy_j))
          << to_string(kind) << " device " << i;
    }
  }
}

TEST(RunSimulation, DroppedDevicesStayOut) {
  const auto c = random_fleet(3, 30, 200, PolicyKind::energy_greedy);
  const auto res = run_simulation(c);
  std::set<DeviceId> dropped;
  for (const auto& rec : res.records) {
    for (DeviceId id : rec.selected) EXPECT_FALSE(dropped.count(id)) << "round " << rec.round;
    for (const auto& e : rec.estimates) EXPECT_FALSE(dropped.count(e.id));
    for (DeviceId id : rec.dropped_so_far) dropped.insert(id);
    EXPECT_EQ(rec.dropped_so_far.size(), dropped.size());
  }
}

TEST(RunSimulation, AccountingClosure) {
  const auto res = run_simulation(random_fleet(13, 50, 100, PolicyKind::random));
  double latency = 0.0;
  double energy = 0.0;
  for (const auto& r : res.records) {
    latency += r.wallclock_s;
    energy += r.energy_j;
  }
  EXPECT_NEAR(res.summary.overall_latency_s, latency, 1e-9 * latency);
  EXPECT_NEAR(res.summary.overall_energy_j, energy, 1e-9 * energy);
  EXPECT_EQ(res.summary.rounds_executed, 100);
  EXPECT_EQ(res.summary.final_accuracy, res.records.back().global_accuracy);
}

TEST(RunSimulation, DeterministicAcrossRunsAndThreads) {
  auto c = random_fleet(17, 40, 60);
  const auto a = rounds_csv(run_simulation(c).records);
  const auto b = rounds_csv(run_simulation(c).records);
  c.threads = 4;
  const auto d = rounds_csv(run_simulation(c).records);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
}

TEST(RunSimulation, StopsAtTargetAccuracy) {
  auto c = random_fleet(2, 20, 500);
  c.target_accuracy = 0.2;
  const auto res = run_simulation(c);
  ASSERT_TRUE(res.summary.rounds_to_target);
  EXPECT_EQ(res.summary.rounds_executed, *res.summary.rounds_to_target);
  EXPECT_GE(res.records.back().global_accuracy, 0.2);
  EXPECT_LT(res.records[res.records.size() - 2].global_accuracy, 0.2);
}

TEST(RunSimulation, ZeroRoundsRejected) {
  auto c = random_fleet(1, 5, 1);
  c.rounds = 0;
  EXPECT_THROW(run_simulation(c), ConfigError);
}

TEST(RunSimulation, TrainerBackendRuns) {
  auto c = preset("mini-trainer", 3);
  c.rounds = 3;
  c.target_accuracy.reset();
  const auto res = run_simulation(c);
  EXPECT_EQ(res.records.size(), 3u);
  EXPECT_EQ(res.records.front().selected.size(), 5u);
  EXPECT_GT(res.records.back().global_accuracy, 0.0);
}

TEST(DropoutRatio, Examples) {
  std::vector<DeviceState> states(100);
  EXPECT_EQ(dropout_ratio(states, 100), 0.0);
  for (int i = 0; i < 46; ++i) states[static_cast<std::size_t>(i)].dropped = true;
  EXPECT_DOUBLE_EQ(dropout_ratio(states, 100), 0.46);
  for (auto& s : states) s.dropped = true;
  EXPECT_EQ(dropout_ratio(states, 100), 1.0);
  EXPECT_THROW(dropout_ratio(states, 0), Error);
}

TEST(StalenessGap, Examples) {
  auto records_with = [](std::vector<std::vector<DeviceId>> picks) {
    std::vector<RoundRecord> recs;
    int r = 0;
    for (auto& p : picks) {
      RoundRecord rec;
      rec.round = ++r;
      rec.selected = std::move(p);
      recs.push_back(rec);
    }
    return recs;
  };
  const std::vector<DeviceId> ids{0, 1, 2};
  const auto recs = records_with({{0, 2}, {0}, {0}, {0}, {0, 2}, {0}});
  const auto gap = staleness_gap(recs, ids);
  EXPECT_EQ(gap.at(0), 0);
  EXPECT_EQ(gap.at(1), 6);
  EXPECT_EQ(gap.at(2), 3);
  EXPECT_THROW(staleness_gap(std::vector<RoundRecord>{}, ids), Error);
}

TEST(StalenessGap, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RoundRecord> recs(1 + trial);
    std::vector<std::vector<bool>> picked(recs.size(), std::vector<bool>(4));
    for (std::size_t r = 0; r < recs.size(); ++r) {
      for (DeviceId id = 0; id < 4; ++id) {
        if (coin(rng)) {
          recs[r].selected.push_back(id);
          picked[r][id] = true;
        }
      }
    }
    const std::vector<DeviceId> ids{0, 1, 2, 3};
    const auto gap = staleness_gap(recs, ids);
    for (DeviceId id = 0; id < 4; ++id) {
      int best = 0;
      for (std::size_t a = 0; a < recs.size(); ++a) {
        for (std::size_t b = a; b < recs.size(); ++b) {
          bool none = true;
          for (std::size_t r = a; r <= b; ++r) none = none && !picked[r][id];
          if (none) best = std::max(best, static_cast<int>(b - a + 1));
        }
      }
      EXPECT_EQ(gap.at(id), best);
    }
  }
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { ++hits[i]; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 5) throw Error("boom");
               }),
               Error);
}

}  // namespace
}  // namespace rewafl
