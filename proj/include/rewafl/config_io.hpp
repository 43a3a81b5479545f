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

/// @file config_io.hpp
/// @brief JSON configuration reading and writing.
///
/// Parsing is strict: unknown keys, wrong types and out-of-range values all
/// raise ConfigError with the JSON path of the field. See README.md for the
/// schema.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "rewafl/config.hpp"
#include "rewafl/errors.hpp"

namespace rewafl {

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

using nlohmann::json;

/// Walks one JSON object, remembering which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(display(), "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) throw ConfigError(child_path(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen(key), fallback);
  }

  std::int64_t integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) throw ConfigError(child_path(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : (seen(key), fallback);
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(child_path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : (seen(key), fallback);
  }

  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw ConfigError(child_path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : (seen(key), fallback);
  }

  bool boolean(const std::string& key) {
    const json& v = get(key);
    if (!v.is_boolean()) throw ConfigError(child_path(key), "expected true or false");
    return v.get<bool>();
  }

  ObjectReader object(const std::string& key) { return ObjectReader(get(key), child_path(key)); }

  const json& array(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) throw ConfigError(child_path(key), "expected an array");
    return v;
  }

  /// Reject keys nobody asked for.
  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!consumed_.count(key)) throw ConfigError(child_path(key), "unknown key");
    }
  }

  /// Mark an optional key as known without reading it.
  void seen(const std::string& key) { consumed_.insert(key); }

  std::string child_path(const std::string& key) const { return path_ + "/" + key; }
  std::string display() const { return path_.empty() ? "/" : path_; }

 private:
  const json& get(const std::string& key) {
    consumed_.insert(key);
    if (!has(key)) throw ConfigError(child_path(key), "missing required field");
    return node_.at(key);
  }
  const json& node_;
  std::string path_;
  std::set<std::string> consumed_;
};

inline std::size_t to_size(std::int64_t v, const std::string& path) {
  if (v < 0) throw ConfigError(path, "must be >= 0");
  return static_cast<std::size_t>(v);
}

inline LinkModel read_link(ObjectReader r, std::uint64_t default_offset) {
  LinkModel link;
  link.mean_rate_bps = r.number("mean_rate_bps");
  link.jitter_fraction = r.number("jitter_fraction", 0.0);
  link.seed_offset = r.unsigned_integer("seed_offset", default_offset);
  r.finish();
  return link;
}

inline DeviceProfile read_device(ObjectReader r) {
  DeviceProfile d;
  const auto id = r.unsigned_integer("id");
  if (id > std::numeric_limits<DeviceId>::max()) throw ConfigError(r.child_path("id"), "too large");
  d.id = static_cast<DeviceId>(id);
  d.per_iter_latency_s = r.number("per_iter_latency_s");
  d.per_iter_energy_j = r.number("per_iter_energy_j");
  d.tx_power_w = r.number("tx_power_w");
  d.initial_energy_j = r.number("initial_energy_j");
  d.reserve_energy_j = r.number("reserve_energy_j", 0.0);
  d.link = read_link(r.object("link"), d.id);
  r.finish();
  return d;
}

inline PolicyConfig read_policy(ObjectReader r) {
  PolicyConfig p;
  const auto name = r.string("name");
  const auto kind = parse_policy_kind(name);
  if (!kind) {
    throw ConfigError(r.child_path("name"),
                      "unknown policy '" + name + "' (rewafl, oort, random, energy-greedy)");
  }
  p.kind = *kind;
  p.k = to_size(r.integer("k"), r.child_path("k"));
  p.alpha = r.number("alpha", 1.0);
  p.beta = r.number("beta", 1.0);
  p.deadline_s = r.number("deadline_s", 60.0);
  p.staleness_weight = r.number("staleness_weight", 0.0);
  if (r.has("adaptive_h")) p.adaptive_h = r.boolean("adaptive_h");
  else r.seen("adaptive_h");
  r.finish();
  return p;
}

inline HSchedule read_schedule(ObjectReader r) {
  HSchedule s;
  const auto h0 = r.integer("h0", s.h0);
  if (h0 < 1 || h0 > std::numeric_limits<int>::max()) {
    throw ConfigError(r.child_path("h0"), "must be a positive integer");
  }
  s.h0 = static_cast<int>(h0);
  s.delta_h = r.number("delta_h", s.delta_h);
  s.psi_ref = r.number("psi_ref", s.psi_ref);
  s.rate_ref_bps = r.number("rate_ref_bps", s.rate_ref_bps);
  s.psi_max = r.number("psi_max", s.psi_max);
  s.epsilon_threshold = r.number("epsilon_threshold", s.epsilon_threshold);
  r.finish();
  return s;
}

inline BackendConfig read_backend(ObjectReader r) {
  const auto type = r.string("type");
  if (type == "synthetic") {
    SyntheticBackendConfig cfg;
    cfg.model_size_bits = r.number("model_size_bits");
    const auto& devices = r.array("devices");
    for (std::size_t i = 0; i < devices.size(); ++i) {
      ObjectReader d(devices[i], r.child_path("devices") + "/" + std::to_string(i));
      LossCurve c;
      c.floor = d.number("floor");
      c.scale = d.number("scale");
      c.decay = d.number("decay");
      cfg.curves.push_back(c);
      cfg.samples.push_back(to_size(d.integer("samples"), d.child_path("samples")));
      d.finish();
    }
    r.finish();
    return cfg;
  }
  if (type == "mini-trainer") {
    TrainerBackendConfig cfg;
    {
      auto m = r.object("model");
      const auto arch = m.string("arch", "logistic");
      if (arch == "logistic") cfg.arch = Architecture::logistic;
      else if (arch == "mlp") cfg.arch = Architecture::mlp;
      else throw ConfigError(m.child_path("arch"), "expected 'logistic' or 'mlp'");
      cfg.hidden = to_size(m.integer("hidden", 32), m.child_path("hidden"));
      m.finish();
    }
    {
      auto d = r.object("dataset");
      const auto dtype = d.string("type");
      if (dtype == "synthetic") {
        SyntheticDataSpec s;
        const auto classes = d.integer("classes");
        if (classes < 2 || classes > 1 << 20) throw ConfigError(d.child_path("classes"), "must be >= 2");
        s.classes = static_cast<int>(classes);
        s.dims = to_size(d.integer("dims"), d.child_path("dims"));
        s.train_n = to_size(d.integer("train_n"), d.child_path("train_n"));
        s.test_n = to_size(d.integer("test_n"), d.child_path("test_n"));
        s.cluster_spread = d.number("cluster_spread");
        cfg.data = s;
      } else if (dtype == "idx") {
        IdxDataSpec s;
        s.train_images = d.string("train_images");
        s.train_labels = d.string("train_labels");
        s.test_images = d.string("test_images");
        s.test_labels = d.string("test_labels");
        cfg.data = s;
      } else {
        throw ConfigError(d.child_path("type"), "expected 'synthetic' or 'idx'");
      }
      d.finish();
    }
    {
      auto p = r.object("partition");
      cfg.lambda = p.number("lambda");
      cfg.samples_per_device =
          to_size(p.integer("samples_per_device", 0), p.child_path("samples_per_device"));
      p.finish();
    }
    cfg.batch_size = to_size(r.integer("batch_size", 16), r.child_path("batch_size"));
    cfg.lr = r.number("lr", 0.1);
    if (r.has("model_size_bits")) cfg.model_size_bits = r.number("model_size_bits");
    else r.seen("model_size_bits");
    r.finish();
    return cfg;
  }
  throw ConfigError(r.child_path("type"), "expected 'synthetic' or 'mini-trainer'");
}

}  // namespace detail

/// Parse and fully validate a configuration document.
inline SimConfig parse_config_json(const nlohmann::json& doc) {
  detail::ObjectReader r(doc, "");
  const auto version = r.integer("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("/schema_version", "unsupported version " + std::to_string(version));
  }
  SimConfig c;
  c.seed = r.unsigned_integer("seed", 1);
  const auto rounds = r.integer("rounds");
  if (rounds < 1 || rounds > std::numeric_limits<int>::max()) {
    throw ConfigError("/rounds", "must be >= 1, got " + std::to_string(rounds));
  }
  c.rounds = static_cast<int>(rounds);
  c.threads = detail::to_size(r.integer("threads", 1), "/threads");
  if (r.has("target_accuracy")) c.target_accuracy = r.number("target_accuracy");
  else r.seen("target_accuracy");

  const auto& fleet = r.array("fleet");
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    c.fleet.push_back(detail::read_device(detail::ObjectReader(fleet[i], "/fleet/" + std::to_string(i))));
  }
  c.policy = detail::read_policy(r.object("policy"));
  if (r.has("schedule")) c.schedule = detail::read_schedule(r.object("schedule"));
  else r.seen("schedule");
  c.backend = detail::read_backend(r.object("backend"));
  r.finish();
  validate(c);
  return c;
}

inline SimConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("/", std::string("malformed JSON: ") + e.what());
  }
  return parse_config_json(doc);
}

inline SimConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline nlohmann::ordered_json config_to_json(const SimConfig& c) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["threads"] = c.threads;
  if (c.target_accuracy) j["target_accuracy"] = *c.target_accuracy;

  ordered_json policy;
  policy["name"] = std::string(to_string(c.policy.kind));
  policy["k"] = c.policy.k;
  policy["alpha"] = c.policy.alpha;
  policy["beta"] = c.policy.beta;
  policy["deadline_s"] = c.policy.deadline_s;
  policy["staleness_weight"] = c.policy.staleness_weight;
  if (c.policy.adaptive_h) policy["adaptive_h"] = *c.policy.adaptive_h;
  j["policy"] = policy;

  ordered_json sched;
  sched["h0"] = c.schedule.h0;
  sched["delta_h"] = c.schedule.delta_h;
  sched["psi_ref"] = c.schedule.psi_ref;
  sched["rate_ref_bps"] = c.schedule.rate_ref_bps;
  sched["psi_max"] = c.schedule.psi_max;
  sched["epsilon_threshold"] = c.schedule.epsilon_threshold;
  j["schedule"] = sched;

  ordered_json fleet = ordered_json::array();
  for (const auto& d : c.fleet) {
    ordered_json dev;
    dev["id"] = d.id;
    dev["per_iter_latency_s"] = d.per_iter_latency_s;
    dev["per_iter_energy_j"] = d.per_iter_energy_j;
    dev["tx_power_w"] = d.tx_power_w;
    dev["initial_energy_j"] = d.initial_energy_j;
    dev["reserve_energy_j"] = d.reserve_energy_j;
    dev["link"] = {{"mean_rate_bps", d.link.mean_rate_bps},
                   {"jitter_fraction", d.link.jitter_fraction},
                   {"seed_offset", d.link.seed_offset}};
    fleet.push_back(dev);
  }
  j["fleet"] = fleet;

  ordered_json backend;
  if (const auto* syn = std::get_if<SyntheticBackendConfig>(&c.backend)) {
    backend["type"] = "synthetic";
    backend["model_size_bits"] = syn->model_size_bits;
    ordered_json devices = ordered_json::array();
    for (std::size_t i = 0; i < syn->curves.size(); ++i) {
      ordered_json d;
      d["floor"] = syn->curves[i].floor;
      d["scale"] = syn->curves[i].scale;
      d["decay"] = syn->curves[i].decay;
      d["samples"] = syn->samples[i];
      devices.push_back(d);
    }
    backend["devices"] = devices;
  } else {
    const auto& tr = std::get<TrainerBackendConfig>(c.backend);
    backend["type"] = "mini-trainer";
    backend["model"] = {{"arch", tr.arch == Architecture::mlp ? "mlp" : "logistic"},
                        {"hidden", tr.hidden}};
    ordered_json data;
    if (const auto* s = std::get_if<SyntheticDataSpec>(&tr.data)) {
      data["type"] = "synthetic";
      data["classes"] = s->classes;
      data["dims"] = s->dims;
      data["train_n"] = s->train_n;
      data["test_n"] = s->test_n;
      data["cluster_spread"] = s->cluster_spread;
    } else {
      const auto& idx = std::get<IdxDataSpec>(tr.data);
      data["type"] = "idx";
      data["train_images"] = idx.train_images;
      data["train_labels"] = idx.train_labels;
      data["test_images"] = idx.test_images;
      data["test_labels"] = idx.test_labels;
    }
    backend["dataset"] = data;
    backend["partition"] = {{"lambda", tr.lambda}, {"samples_per_device", tr.samples_per_device}};
    backend["batch_size"] = tr.batch_size;
    backend["lr"] = tr.lr;
    if (tr.model_size_bits) backend["model_size_bits"] = *tr.model_size_bits;
  }
  j["backend"] = backend;
  return j;
}

inline std::string config_to_text(const SimConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace rewafl
