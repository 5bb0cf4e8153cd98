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

// One seeded run of a scenario: warm-up, open-loop workload over the phase
// plan, fault schedule, drain, and the conservation and budget-leak checks.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/metrics.h"
#include "cachemw/scenario.h"
#include "cachemw/strategy.h"

namespace cachemw {

struct RunResult {
  std::uint64_t seed = 0;
  Report report;
  nlohmann::json strategy_stats;
  nlohmann::json route_state;
  std::uint64_t issued = 0;
  std::uint64_t kernel_digest = 0;
};

/// Throws InternalError when outcome conservation or budget release fails.
/// `observer` (optional) sees every request outcome.
RunResult run_once(const Scenario& scenario, std::uint64_t seed,
                   std::function<void(const Request&, Outcome)> observer = nullptr);

/// Per-seed files under `dir`: metrics.csv, summary.json, run_state.json.
void write_run(const Scenario& scenario, const RunResult& run, const std::string& dir);

/// Cross-seed aggregate: per phase, totals and means of the per-seed values.
nlohmann::json aggregate(const Scenario& scenario, const std::vector<RunResult>& runs);

}  // namespace cachemw
