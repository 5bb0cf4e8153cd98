// Copyright 2026 The cachemw Authors.
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

#include "cachemw/scenario.h"

#include <cmath>
#include <filesystem>

#include "cachemw/errors.h"
#include "cachemw/strategy_proxy_pool.h"
#include "cachemw/strategy_replicating_router.h"
#include "cachemw/strategy_token_ring.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

namespace {

Micros to_micros(double s) { return static_cast<Micros>(std::llround(s * 1e6)); }

json layered(const json& base, const json& over) {
  json out = base.is_object() ? base : json::object();
  if (!over.is_null()) {
    if (!over.is_object()) return over;
    out.merge_patch(over);
  }
  return out;
}

PhasePlan parse_phases(const json& j) {
  PhasePlan p;
  if (j.is_null()) return p;
  check_keys(j, "phases", {"warmup_s", "fault_s", "recovery_s"});
  p.warmup_s = get_or(j, "warmup_s", p.warmup_s, "phases");
  p.fault_s = get_or(j, "fault_s", p.fault_s, "phases");
  p.recovery_s = get_or(j, "recovery_s", p.recovery_s, "phases");
  for (double v : {p.warmup_s, p.fault_s, p.recovery_s})
    if (!(v >= 0) || v != std::floor(v)) throw ConfigError("phase lengths must be whole non-negative seconds");
  if (p.total_s() <= 0) throw ConfigError("phases must add up to a positive duration");
  return p;
}

NetworkParams parse_network(const json& j) {
  NetworkParams n;
  if (j.is_null()) return n;
  check_keys(j, "network", {"propagation_us", "header_bytes", "unshaped_bandwidth_bps"});
  n.propagation_us = get_or(j, "propagation_us", n.propagation_us, "network");
  n.header_bytes = get_or(j, "header_bytes", n.header_bytes, "network");
  n.unshaped_bandwidth_bps = get_or(j, "unshaped_bandwidth_bps", n.unshaped_bandwidth_bps, "network");
  if (n.propagation_us < 0 || !(n.unshaped_bandwidth_bps > 0)) throw ConfigError("network parameters out of range");
  return n;
}

CapacityConfig parse_capacity(const json& j) {
  CapacityConfig c;
  if (j.is_null()) return c;
  const std::string where = "capacity";
  check_keys(j, where, {"p99_bound_ms", "max_error_rate", "rate_min", "rate_max", "iterations", "duration_s"});
  c.p99_bound_ms = get_or(j, "p99_bound_ms", c.p99_bound_ms, where);
  c.max_error_rate = get_or(j, "max_error_rate", c.max_error_rate, where);
  c.rate_min = get_or(j, "rate_min", c.rate_min, where);
  c.rate_max = get_or(j, "rate_max", c.rate_max, where);
  c.iterations = get_or(j, "iterations", c.iterations, where);
  c.duration_s = get_or(j, "duration_s", c.duration_s, where);
  if (!(c.rate_min > 0 && c.rate_min < c.rate_max)) throw ConfigError("capacity needs 0 < rate_min < rate_max");
  if (!(c.p99_bound_ms > 0) || !(c.duration_s >= 1) || c.iterations < 1)
    throw ConfigError("capacity bounds out of range");
  return c;
}

}  // namespace

std::vector<Phase> PhasePlan::phases() const {
  const Micros a = to_micros(warmup_s), b = a + to_micros(fault_s), c = b + to_micros(recovery_s);
  return {{"warmup", 0, a}, {"fault", a, b}, {"recovery", b, c}};
}

FaultWindow PhasePlan::fault_window() const {
  return {to_micros(warmup_s), to_micros(warmup_s + fault_s)};
}

Scenario parse_scenario(const json& doc, const json& calibration, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("scenario must be an object");
  check_keys(doc, "scenario",
             {"name", "calibration", "topology", "strategy", "workload", "faults", "phases", "seeds",
              "output", "network", "capacity"});
  if (!calibration.is_null()) {
    if (!calibration.is_object()) throw ConfigError("calibration profile must be an object");
    check_keys(calibration, "calibration", {"topology", "strategy", "workload", "network", "capacity", "phases"});
  }
  auto cal = [&](const char* key) { return calibration.is_object() && calibration.contains(key) ? calibration.at(key) : json(); };
  auto sec = [&](const char* key) { return doc.contains(key) ? doc.at(key) : json(); };

  if (!doc.contains("strategy") || !doc.at("strategy").is_object()) throw ConfigError("scenario has no strategy section");
  if (!doc.at("strategy").contains("kind") || !doc.at("strategy").at("kind").is_string())
    throw ConfigError("strategy.kind is required");

  Scenario s;
  s.base_dir = base_dir;
  s.name = get_or<std::string>(doc, "name", "scenario", "scenario");
  s.kind = parse_strategy_kind(doc.at("strategy").at("kind").get<std::string>());

  json strategy_base = cal("strategy");
  if (strategy_base.is_object()) {
    const auto kind = to_string(s.kind);
    strategy_base = strategy_base.contains(kind) ? strategy_base.at(kind) : json::object();
  }
  s.doc = json::object();
  s.doc["name"] = s.name;
  s.doc["topology"] = layered(cal("topology"), sec("topology"));
  s.doc["strategy"] = layered(strategy_base, sec("strategy"));
  s.doc["workload"] = layered(cal("workload"), sec("workload"));
  s.doc["network"] = layered(cal("network"), sec("network"));
  s.doc["capacity"] = layered(cal("capacity"), sec("capacity"));
  s.doc["phases"] = layered(cal("phases"), sec("phases"));
  s.doc["faults"] = doc.contains("faults") ? doc.at("faults") : json::array();

  s.topology = build_topology(s.doc["topology"], s.kind);
  s.workload = parse_workload(s.doc["workload"], base_dir);
  s.network = parse_network(s.doc["network"]);
  s.capacity = parse_capacity(s.doc["capacity"]);
  s.phases = parse_phases(s.doc["phases"]);
  s.faults = parse_faults(s.doc["faults"], s.topology, s.phases.fault_window());
  switch (s.kind) {
    case StrategyKind::kProxyPool: parse_proxy_config(s.doc["strategy"]); break;
    case StrategyKind::kReplicatingRouter: parse_router_config(s.doc["strategy"]); break;
    case StrategyKind::kTokenRing: parse_ring_config(s.doc["strategy"]); break;
  }
  if (doc.contains("seeds")) {
    s.seeds = get_or<std::vector<std::uint64_t>>(doc, "seeds", {}, "scenario");
    if (s.seeds.empty()) throw ConfigError("seeds must be a non-empty list");
  }
  s.output = get_or<std::string>(doc, "output", "out/" + s.name, "scenario");
  return s;
}

Scenario load_scenario(const std::string& path) {
  namespace fs = std::filesystem;
  const json doc = read_json(path);
  const std::string base = fs::path(path).parent_path().string();
  json calibration;
  if (doc.is_object() && doc.contains("calibration")) {
    if (!doc.at("calibration").is_string()) throw ConfigError("calibration must be a file path");
    calibration = read_json((fs::path(base) / doc.at("calibration").get<std::string>()).string());
  }
  return parse_scenario(doc, calibration, base);
}

}  // namespace cachemw
