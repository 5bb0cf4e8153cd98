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

#pragma once

// Scenario documents: topology, strategy, workload, faults, phases, seeds and
// output, layered over a calibration profile.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cluster.h"
#include "cachemw/faults.h"
#include "cachemw/metrics.h"
#include "cachemw/topology.h"
#include "cachemw/workload.h"

namespace cachemw {

struct PhasePlan {
  double warmup_s = 200;
  double fault_s = 200;
  double recovery_s = 200;

  double total_s() const { return warmup_s + fault_s + recovery_s; }
  std::vector<Phase> phases() const;
  FaultWindow fault_window() const;
};

struct CapacityConfig {
  double p99_bound_ms = 20;
  double max_error_rate = 0.001;
  double rate_min = 500;
  double rate_max = 100'000;
  std::size_t iterations = 12;
  double duration_s = 20;
};

struct Scenario {
  std::string name;
  std::string base_dir;
  nlohmann::json doc;  // effective document after the calibration merge
  StrategyKind kind = StrategyKind::kProxyPool;
  ClusterTopology topology;
  WorkloadConfig workload;
  NetworkParams network;
  PhasePlan phases;
  std::vector<FaultSpec> faults;
  std::vector<std::uint64_t> seeds{1};
  std::string output = "out";
  CapacityConfig capacity;
};

/// Builds a scenario from an in-memory document. `calibration` is the
/// profile the document is layered on (may be null). Throws ConfigError.
Scenario parse_scenario(const nlohmann::json& doc, const nlohmann::json& calibration,
                        const std::string& base_dir);

/// Reads a scenario file and the calibration profile it names (path
/// relative to the scenario). Throws IoError or ConfigError.
Scenario load_scenario(const std::string& path);

}  // namespace cachemw
