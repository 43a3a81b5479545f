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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rewafl/config_io.hpp"
#include "rewafl/engine.hpp"
#include "rewafl/output.hpp"
#include "rewafl/presets.hpp"

namespace rewafl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json minimal() {
  return json::parse(R"({
    "rounds": 10,
    "policy": {"name": "rewafl", "k": 1},
    "fleet": [
      {"id": 0, "per_iter_latency_s": 0.1, "per_iter_energy_j": 1.0, "tx_power_w": 1.0,
       "initial_energy_j": 100.0, "reserve_energy_j": 5.0, "link": {"mean_rate_bps": 1e6}},
      {"id": 1, "per_iter_latency_s": 0.2, "per_iter_energy_j": 2.0, "tx_power_w": 1.0,
       "initial_energy_j": 100.0, "link": {"mean_rate_bps": 2e6, "jitter_fraction": 0.1}}
    ],
    "backend": {"type": "synthetic", "model_size_bits": 1e5,
                "devices": [{"floor": 0.1, "scale": 1.0, "decay": 0.01, "samples": 10},
                            {"floor": 0.2, "scale": 2.0, "decay": 0.02, "samples": 20}]}
  })");
}

std::string error_path(const json& doc) {
  try {
    parse_config_json(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(ParseConfig, MinimalAppliesDefaults) {
  const auto c = parse_config_json(minimal());
  EXPECT_EQ(c.policy.alpha, 1.0);
  EXPECT_EQ(c.policy.beta, 1.0);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.threads, 1u);
  EXPECT_EQ(c.rounds, 10);
  EXPECT_FALSE(c.target_accuracy);
  EXPECT_EQ(c.fleet.size(), 2u);
  EXPECT_EQ(c.fleet[1].reserve_energy_j, 0.0);
  EXPECT_EQ(c.fleet[1].link.seed_offset, 1u);
  EXPECT_EQ(c.schedule.h0, HSchedule{}.h0);
}

TEST(ParseConfig, KLargerThanFleetNamesBothValues) {
  auto doc = minimal();
  doc["policy"]["k"] = 200;
  doc["fleet"] = json::array();
  doc["backend"]["devices"] = json::array();
  for (int i = 0; i < 100; ++i) {
    doc["fleet"].push_back(minimal()["fleet"][0]);
    doc["fleet"].back()["id"] = i;
    doc["backend"]["devices"].push_back(minimal()["backend"]["devices"][0]);
  }
  try {
    parse_config_json(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/policy/k");
    const std::string msg = e.what();
    EXPECT_NE(msg.find("200"), std::string::npos);
    EXPECT_NE(msg.find("100"), std::string::npos);
  }
}

TEST(ParseConfig, LambdaOutOfRange) {
  const auto doc = json::parse(config_to_text(preset("mini-trainer")));
  auto bad = doc;
  bad["backend"]["partition"]["lambda"] = 1.5;
  EXPECT_EQ(error_path(bad), "/backend/partition/lambda");
}

TEST(ParseConfig, DiagnosticsNameTheField) {
  auto doc = minimal();
  doc.erase("rounds");
  EXPECT_EQ(error_path(doc), "/rounds");

  doc = minimal();
  doc["rounds"] = 0;
  EXPECT_EQ(error_path(doc), "/rounds");

  doc = minimal();
  doc["rounds"] = "ten";
  EXPECT_EQ(error_path(doc), "/rounds");

  doc = minimal();
  doc["fleet"][1]["tx_power_w"] = "loud";
  EXPECT_EQ(error_path(doc), "/fleet/1/tx_power_w");

  doc = minimal();
  doc["fleet"][0]["link"].erase("mean_rate_bps");
  EXPECT_EQ(error_path(doc), "/fleet/0/link/mean_rate_bps");

  doc = minimal();
  doc["fleet"][1]["id"] = 0;
  EXPECT_EQ(error_path(doc), "/fleet/1/id");

  doc = minimal();
  doc["policy"]["name"] = "greedy";
  EXPECT_EQ(error_path(doc), "/policy/name");

  doc = minimal();
  doc["backend"]["devices"].erase(1);
  EXPECT_EQ(error_path(doc), "/backend/devices");

  doc = minimal();
  doc["backend"]["type"] = "tensorflow";
  EXPECT_EQ(error_path(doc), "/backend/type");
}

TEST(ParseConfig, UnknownKeysRejected) {
  auto doc = minimal();
  doc["colour"] = "blue";
  EXPECT_EQ(error_path(doc), "/colour");
  doc = minimal();
  doc["policy"]["gamma"] = 2;
  EXPECT_EQ(error_path(doc), "/policy/gamma");
  doc = minimal();
  doc["fleet"][0]["link"]["mtu"] = 1500;
  EXPECT_EQ(error_path(doc), "/fleet/0/link/mtu");
}

TEST(ParseConfig, MalformedTextAndMissingFile) {
  EXPECT_THROW(parse_config_text("{ not json"), ConfigError);
  EXPECT_THROW(parse_config(fs::temp_directory_path() / "rewafl_no_such_file.json"), ConfigError);
}

TEST(ParseConfig, RoundTripsEveryPreset) {
  for (const auto& name : preset_names()) {
    const auto original = preset(name, 5);
    const auto text = config_to_text(original);
    const auto parsed = parse_config_text(text);
    EXPECT_EQ(config_to_text(parsed), text) << name;
    EXPECT_EQ(parsed.fleet.size(), original.fleet.size());
    EXPECT_EQ(parsed.fleet.back().initial_energy_j, original.fleet.back().initial_energy_j);
  }
  auto c = parse_config_json(minimal());
  c.policy.adaptive_h = false;
  c.target_accuracy = 0.5;
  EXPECT_EQ(config_to_text(parse_config_text(config_to_text(c))), config_to_text(c));
}

TEST(Presets, PaperFleetShape) {
  const auto c = preset("paper-fleet");
  EXPECT_EQ(c.fleet.size(), 100u);
  EXPECT_EQ(c.policy.k, 20u);
  bool low = false;
  bool high = false;
  for (const auto& d : c.fleet) {
    low = low || std::abs(d.link.mean_rate_bps - 0.64e6) < 1e-6;
    high = high || std::abs(d.link.mean_rate_bps - 79.60e6) < 1e-6;
  }
  EXPECT_TRUE(low);
  EXPECT_TRUE(high);
}

TEST(Presets, TwoDeviceStaleness) {
  const auto c = preset("two-device-staleness");
  ASSERT_EQ(c.fleet.size(), 2u);
  EXPECT_EQ(c.policy.k, 1u);
  auto a = c.fleet[0];
  auto b = c.fleet[1];
  EXPECT_GT(a.link.mean_rate_bps, b.link.mean_rate_bps);
  a.link = b.link = LinkModel{};
  a.id = b.id = 0;
  EXPECT_EQ(a.per_iter_latency_s, b.per_iter_latency_s);
  EXPECT_EQ(a.per_iter_energy_j, b.per_iter_energy_j);
  EXPECT_EQ(a.initial_energy_j, b.initial_energy_j);
  EXPECT_EQ(a.tx_power_w, b.tx_power_w);
}

TEST(Presets, UnknownName) { EXPECT_THROW(preset("paper-fleet-xl"), UnknownPresetError); }

class OutputTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rewafl_out_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

TEST_F(OutputTest, RoundsCsvHasOneRowPerRound) {
  auto c = preset("paper-fleet", 2);
  c.rounds = 17;
  const auto res = run_simulation(c);
  write_outputs(res.records, res.summary, dir_, "rewafl", 2);
  std::ifstream in(dir_ / "rounds.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# schema=rewafl-rounds version=", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "round,wallclock_s,energy_j,accuracy,loss,num_selected,num_dropped");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 17);

  const auto summary = json::parse(slurp(dir_ / "summary.json"));
  EXPECT_EQ(summary["schema"], "rewafl-summary");
  EXPECT_EQ(summary["version"], kOutputSchemaVersion);
  EXPECT_EQ(summary["rounds_executed"], 17);
  EXPECT_TRUE(summary["rounds_to_target"].is_null());

  std::ifstream ev(dir_ / "events.jsonl");
  std::getline(ev, line);
  const auto header = json::parse(line);
  EXPECT_EQ(header["schema"], "rewafl-events");
  std::set<std::string> kinds;
  while (std::getline(ev, line)) kinds.insert(json::parse(line)["type"].get<std::string>());
  EXPECT_TRUE(kinds.count("selection"));
  EXPECT_TRUE(kinds.count("utility"));
  EXPECT_TRUE(kinds.count("h_change"));
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().extension() == ".tmp", false) << entry.path();
  }
}

TEST_F(OutputTest, RerunIsByteIdentical) {
  auto c = preset("paper-fleet-tight", 4);
  c.rounds = 40;
  c.policy.kind = PolicyKind::oort;
  const auto a = run_simulation(c);
  write_outputs(a.records, a.summary, dir_ / "a", "oort", 4);
  const auto b = run_simulation(c);
  write_outputs(b.records, b.summary, dir_ / "b", "oort", 4);
  for (const char* f : {"rounds.csv", "events.jsonl", "summary.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(OutputTest, UnwritableDirectoryReportsPath) {
  fs::create_directories(dir_);
  const auto blocker = dir_ / "file";
  std::ofstream(blocker) << "x";
  try {
    write_outputs({}, MetricsSummary{}, blocker / "sub");
    FAIL() << "expected OutputError";
  } catch (const OutputError& e) {
    EXPECT_NE(std::string(e.what()).find(blocker.string()), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(blocker / "sub"));
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
}

}  // namespace
}  // namespace rewafl
