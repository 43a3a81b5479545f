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

/// @file output.hpp
/// @brief rounds.csv, events.jsonl and summary.json writers.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rewafl/engine.hpp"
#include "rewafl/errors.hpp"

namespace rewafl {

inline constexpr int kOutputSchemaVersion = 1;

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string rounds_csv(std::span<const RoundRecord> records) {
  std::string out = "# schema=rewafl-rounds version=" + std::to_string(kOutputSchemaVersion) + "\n";
  out += "round,wallclock_s,energy_j,accuracy,loss,num_selected,num_dropped\n";
  for (const auto& r : records) {
    out += std::to_string(r.round);
    out += ',' + format_number(r.wallclock_s);
    out += ',' + format_number(r.energy_j);
    out += ',' + format_number(r.global_accuracy);
    out += ',' + format_number(r.global_loss);
    out += ',' + std::to_string(r.selected.size());
    out += ',' + std::to_string(r.dropped_so_far.size()) + '\n';
  }
  return out;
}

inline std::string events_jsonl(std::span<const RoundRecord> records) {
  using nlohmann::ordered_json;
  std::string out;
  auto emit = [&out](const ordered_json& j) { out += j.dump() + '\n'; };
  emit({{"type", "header"}, {"schema", "rewafl-events"}, {"version", kOutputSchemaVersion}});
  for (const auto& r : records) {
    emit({{"type", "selection"},
          {"round", r.round},
          {"selected", r.selected},
          {"stalled", r.stalled},
          {"wallclock_s", r.wallclock_s},
          {"energy_j", r.energy_j}});
    for (const auto& e : r.estimates) {
      if (!e.utility) continue;
      const auto& u = *e.utility;
      emit({{"type", "utility"},
            {"round", r.round},
            {"id", e.id},
            {"rate_bps", e.rate_bps},
            {"h", e.h},
            {"latency_s", e.latency_s},
            {"energy_j", e.energy_j},
            {"residual_j", e.residual_j},
            {"statistical", u.statistical},
            {"latency_factor", u.latency_factor},
            {"energy_factor", u.energy_factor},
            {"total", u.total},
            {"eligible", u.eligible}});
    }
    for (const auto& ev : r.events) {
      ordered_json j;
      j["round"] = r.round;
      j["id"] = ev.id;
      switch (ev.kind) {
        case EventKind::h_change:
          j["type"] = "h_change";
          j["h_before"] = ev.h_before;
          j["h_after"] = ev.h_after;
          break;
        case EventKind::freeze:
          j["type"] = "freeze";
          j["h"] = ev.h_after;
          break;
        case EventKind::drop:
          j["type"] = "drop";
          j["residual_j"] = ev.residual_j;
          break;
      }
      emit(j);
    }
  }
  return out;
}

inline std::string summary_json(const MetricsSummary& m, std::string_view policy,
                                std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["schema"] = "rewafl-summary";
  j["version"] = kOutputSchemaVersion;
  j["policy"] = std::string(policy);
  j["seed"] = seed;
  j["rounds_executed"] = m.rounds_executed;
  j["dropout_ratio"] = m.dropout_ratio;
  j["overall_latency_s"] = m.overall_latency_s;
  j["overall_energy_j"] = m.overall_energy_j;
  j["rounds_to_target"] = m.rounds_to_target ? nlohmann::ordered_json(*m.rounds_to_target)
                                             : nlohmann::ordered_json(nullptr);
  j["final_accuracy"] = m.final_accuracy;
  j["final_loss"] = m.final_loss;
  return j.dump(2) + "\n";
}

/// Write several files so that either all of them appear or none do
/// (modulo a crash between renames). Each file goes to a temporary sibling
/// first.
inline void write_files_atomically(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputError(dir.string() + ": cannot create directory: " + ec.message());
  std::vector<std::pair<fs::path, fs::path>> staged;
  auto cleanup = [&staged] {
    std::error_code ignore;
    for (const auto& [tmp, _] : staged) fs::remove(tmp, ignore);
  };
  for (const auto& [name, content] : files) {
    const fs::path final_path = dir / name;
    const fs::path tmp = dir / ("." + name + ".tmp");
    staged.emplace_back(tmp, final_path);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      cleanup();
      throw OutputError(tmp.string() + ": write failed");
    }
  }
  for (const auto& [tmp, final_path] : staged) {
    fs::rename(tmp, final_path, ec);
    if (ec) {
      cleanup();
      throw OutputError(final_path.string() + ": rename failed: " + ec.message());
    }
  }
}

inline void write_outputs(std::span<const RoundRecord> records, const MetricsSummary& summary,
                          const std::filesystem::path& out_dir, std::string_view policy = "",
                          std::uint64_t seed = 0) {
  write_files_atomically(out_dir, {{"rounds.csv", rounds_csv(records)},
                                   {"events.jsonl", events_jsonl(records)},
                                   {"summary.json", summary_json(summary, policy, seed)}});
}

}  // namespace rewafl
