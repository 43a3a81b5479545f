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

// rewafl-sim: run, emit and compare federated-learning selection scenarios.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rewafl/rewafl.hpp"

namespace {

struct Overrides {
  std::optional<std::string> policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::size_t> threads;
};

rewafl::SimConfig load(const std::string& path, const Overrides& o) {
  auto cfg = rewafl::parse_config(path);
  if (o.policy) {
    const auto kind = rewafl::parse_policy_kind(*o.policy);
    if (!kind) throw rewafl::ConfigError("--policy", "unknown policy '" + *o.policy + "'");
    cfg.policy.kind = *kind;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.rounds) cfg.rounds = *o.rounds;
  if (o.threads) cfg.threads = *o.threads;
  rewafl::validate(cfg);
  return cfg;
}

rewafl::MetricsSummary run_to(const rewafl::SimConfig& cfg, const std::filesystem::path& out) {
  const auto result = rewafl::run_simulation(cfg);
  rewafl::write_outputs(result.records, result.summary, out, rewafl::to_string(cfg.policy.kind),
                        cfg.seed);
  return result.summary;
}

void print_summary(std::string_view policy, const rewafl::MetricsSummary& m) {
  std::cout << policy << ": rounds=" << m.rounds_executed << " dropout=" << m.dropout_ratio
            << " latency_s=" << m.overall_latency_s << " energy_j=" << m.overall_energy_j
            << " accuracy=" << m.final_accuracy << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy- and staleness-aware federated learning selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  Overrides overrides;

  auto* sim = app.add_subcommand("simulate", "Run one configured scenario");
  sim->add_option("--config", config_path, "JSON scenario file")->required();
  sim->add_option_function<std::string>("--policy", [&](const std::string& v) { overrides.policy = v; },
                                        "rewafl|oort|random|energy-greedy");
  sim->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { overrides.seed = v; });
  sim->add_option_function<int>("--rounds", [&](int v) { overrides.rounds = v; });
  sim->add_option_function<std::size_t>("--threads", [&](std::size_t v) { overrides.threads = v; });
  sim->add_option("--out", out_dir, "Output directory");

  std::string preset_name;
  std::string emit_path;
  std::uint64_t preset_seed = 1;
  auto* pre = app.add_subcommand("preset", "Write a named scenario as JSON");
  pre->add_option("--name", preset_name, "paper-fleet | paper-fleet-tight | two-device-staleness | mini-trainer")
      ->required();
  pre->add_option("--emit", emit_path, "Destination file")->required();
  pre->add_option("--seed", preset_seed, "Seed for the generated fleet");

  std::string policies = "rewafl,oort,random,energy-greedy";
  auto* cmp = app.add_subcommand("compare", "Run one scenario under several policies");
  cmp->add_option("--config", config_path, "JSON scenario file")->required();
  cmp->add_option("--policies", policies, "Comma-separated policy names");
  cmp->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { overrides.seed = v; });
  cmp->add_option_function<int>("--rounds", [&](int v) { overrides.rounds = v; });
  cmp->add_option_function<std::size_t>("--threads", [&](std::size_t v) { overrides.threads = v; });
  cmp->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto cfg = load(config_path, overrides);
      print_summary(rewafl::to_string(cfg.policy.kind), run_to(cfg, out_dir));
    } else if (*pre) {
      const auto cfg = rewafl::preset(preset_name, preset_seed);
      rewafl::write_files_atomically(
          std::filesystem::path(emit_path).parent_path().empty()
              ? std::filesystem::path(".")
              : std::filesystem::path(emit_path).parent_path(),
          {{std::filesystem::path(emit_path).filename().string(), rewafl::config_to_text(cfg)}});
    } else if (*cmp) {
      std::vector<std::string> names;
      std::stringstream ss(policies);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) names.push_back(item);
      }
      if (names.empty()) throw rewafl::ConfigError("--policies", "no policies given");
      // Validate every variant before running any of them.
      std::vector<rewafl::SimConfig> configs;
      for (const auto& name : names) {
        Overrides o = overrides;
        o.policy = name;
        configs.push_back(load(config_path, o));
      }
      std::string table =
          "policy,dropout_ratio,overall_latency_s,overall_energy_j,rounds_to_target,"
          "final_accuracy,final_loss,rounds_executed\n";
      for (const auto& cfg : configs) {
        const std::string name(rewafl::to_string(cfg.policy.kind));
        const auto m = run_to(cfg, std::filesystem::path(out_dir) / name);
        print_summary(name, m);
        table += name + ',' + rewafl::format_number(m.dropout_ratio) + ',' +
                 rewafl::format_number(m.overall_latency_s) + ',' +
                 rewafl::format_number(m.overall_energy_j) + ',' +
                 (m.rounds_to_target ? std::to_string(*m.rounds_to_target) : std::string()) + ',' +
                 rewafl::format_number(m.final_accuracy) + ',' +
                 rewafl::format_number(m.final_loss) + ',' + std::to_string(m.rounds_executed) +
                 '\n';
      }
      rewafl::write_files_atomically(out_dir, {{"compare.csv", table}});
    }
  } catch (const rewafl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rewafl::UnknownPresetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
