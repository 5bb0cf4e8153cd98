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

#include <iostream>

#include <CLI11.hpp>

#include "cachemw/expctl.h"

int main(int argc, char** argv) {
  using namespace cachemw;
  CLI::App app{"Cache middleware fault-injection experiments"};
  app.require_subcommand(1);

  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t repetitions = 0;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run a scenario over one or more seeds");
  run->add_option("scenario", scenario, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "First seed");
  auto* reps_opt = run->add_option("--repetitions", repetitions, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> dirs;
  std::string csv;
  auto* compare = app.add_subcommand("compare", "Compare completed runs phase by phase");
  compare->add_option("dirs", dirs, "Run output directories")->required();
  auto* csv_opt = compare->add_option("--csv", csv, "Write the comparison CSV here");

  std::string cap_scenario;
  auto* capacity = app.add_subcommand("capacity", "Find the highest sustainable request rate");
  capacity->add_option("scenario", cap_scenario, "Scenario file")->required();

  std::string state, op, key;
  std::uint32_t client = 0;
  auto* route = app.add_subcommand("route", "Show where a router would send a request");
  route->add_option("run_state", state, "run_state.json of a router run")->required();
  route->add_option("op", op, "get or set")->required();
  route->add_option("key", key, "Key")->required();
  route->add_option("--client", client, "Client id (selects the read replica)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) {
    RunOptions opt;
    if (*seed_opt) opt.seed = seed;
    if (*reps_opt) opt.repetitions = repetitions;
    if (*out_opt) opt.out = out_dir;
    return cmd_run(scenario, opt, std::cout, std::cerr);
  }
  if (compare->parsed()) {
    std::optional<std::string> path;
    if (*csv_opt) path = csv;
    return cmd_compare(dirs, path, std::cout, std::cerr);
  }
  if (capacity->parsed()) return cmd_capacity(cap_scenario, std::cout, std::cerr);
  return cmd_route(state, op, key, client, std::cout, std::cerr);
}
