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

// Experiment controller commands behind the CLI. Each returns a process
// exit code: 0 ok, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cachemw/scenario.h"

namespace cachemw {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repetitions;
  std::optional<std::string> out;
};

/// Seeds a run uses: the scenario's list, or `repetitions` consecutive
/// seeds starting at `seed` (or the scenario's first seed).
std::vector<std::uint64_t> seeds_for(const Scenario& sc, const RunOptions& opt);

struct CapacityResult {
  double rate = 0;
  struct Probe {
    double rate;
    double p99_ms;
    double error_rate;
    bool ok;
  };
  std::vector<Probe> probes;
};

/// Highest sustainable target rate of a fault-free copy of `sc`.
CapacityResult capacity_probe(const Scenario& sc, std::uint64_t seed);

int cmd_run(const std::string& scenario, const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_compare(const std::vector<std::string>& dirs, const std::optional<std::string>& csv_path,
                std::ostream& out, std::ostream& err);
int cmd_capacity(const std::string& scenario, std::ostream& out, std::ostream& err);
int cmd_route(const std::string& run_state, const std::string& op, const std::string& key,
              std::uint32_t client, std::ostream& out, std::ostream& err);

}  // namespace cachemw
