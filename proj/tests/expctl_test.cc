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

#include "cachemw/expctl.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cachemw/metrics.h"

namespace cachemw {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class Expctl : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("cachemw_expctl_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const json& doc) {
    const auto p = dir_ / name;
    std::ofstream(p) << doc.dump(2);
    return p.string();
  }

  json scenario(const std::string& kind, double warm = 2) {
    return {{"name", "x-" + kind},
            {"topology", {{"nodes", 6}, {"groups", kind == "proxy_pool" ? 1 : 3}}},
            {"strategy", {{"kind", kind}}},
            {"workload", {{"key_count", 500}, {"target_rate", 400}, {"clients", 6}}},
            {"phases", {{"warmup_s", warm}, {"fault_s", 2}, {"recovery_s", 2}}},
            {"output", (dir_ / ("out-" + kind)).string()}};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Expctl, RunWritesPerSeedAndAggregate) {
  const auto s = write("s.json", scenario("proxy_pool"));
  RunOptions opt;
  opt.seed = 5;
  opt.repetitions = 3;
  ASSERT_EQ(cmd_run(s, opt, out_, err_), kExitOk) << err_.str();
  for (int seed : {5, 6, 7}) EXPECT_TRUE(fs::exists(dir_ / "out-proxy_pool" / ("seed-" + std::to_string(seed)) / "metrics.csv"));
  const auto agg = read_json((dir_ / "out-proxy_pool" / "summary.json").string());
  EXPECT_EQ(agg["seeds"], json({5, 6, 7}));
}

TEST_F(Expctl, SeedsFor) {
  Scenario sc;
  sc.seeds = {9, 4};
  EXPECT_EQ(seeds_for(sc, {}), (std::vector<std::uint64_t>{9, 4}));
  EXPECT_EQ(seeds_for(sc, {std::uint64_t{3}, std::nullopt, std::nullopt}), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(seeds_for(sc, {std::nullopt, std::size_t{2}, std::nullopt}), (std::vector<std::uint64_t>{9, 10}));
}

TEST_F(Expctl, ExitCodes) {
  RunOptions opt;
  EXPECT_EQ(cmd_run((dir_ / "missing.json").string(), opt, out_, err_), kExitIo);
  json bad = scenario("proxy_pool");
  bad["strategy"]["bogus"] = 1;
  EXPECT_EQ(cmd_run(write("bad.json", bad), opt, out_, err_), kExitConfig);
  std::ofstream(dir_ / "broken.json") << "{";
  EXPECT_EQ(cmd_run((dir_ / "broken.json").string(), opt, out_, err_), kExitConfig);
  json unwritable = scenario("proxy_pool");
  std::ofstream(dir_ / "file") << "x";
  unwritable["output"] = (dir_ / "file" / "sub").string();
  EXPECT_EQ(cmd_run(write("u.json", unwritable), opt, out_, err_), kExitIo);
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(Expctl, CompareSelfHasZeroDeltas) {
  const auto s = write("s.json", scenario("proxy_pool"));
  ASSERT_EQ(cmd_run(s, {}, out_, err_), kExitOk);
  const auto run = (dir_ / "out-proxy_pool").string();
  const auto csv = (dir_ / "cmp.csv").string();
  ASSERT_EQ(cmd_compare({run, run}, csv, out_, err_), kExitOk) << err_.str();
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("run,strategy,phase", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(",0.0000,0.000"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 6u);
  EXPECT_EQ(cmd_compare({run}, std::nullopt, out_, err_), kExitConfig);
  EXPECT_EQ(cmd_compare({run, (dir_ / "nope").string()}, std::nullopt, out_, err_), kExitIo);
}

TEST_F(Expctl, CompareRejectsDifferentPhasePlans) {
  ASSERT_EQ(cmd_run(write("a.json", scenario("proxy_pool")), {}, out_, err_), kExitOk);
  json b = scenario("token_ring", 3);
  ASSERT_EQ(cmd_run(write("b.json", b), {}, out_, err_), kExitOk);
  EXPECT_EQ(cmd_compare({(dir_ / "out-proxy_pool").string(), (dir_ / "out-token_ring").string()}, std::nullopt,
                        out_, err_),
            kExitConfig);
}

TEST_F(Expctl, CompareAcrossStrategies) {
  ASSERT_EQ(cmd_run(write("a.json", scenario("proxy_pool")), {}, out_, err_), kExitOk);
  ASSERT_EQ(cmd_run(write("b.json", scenario("replicating_router")), {}, out_, err_), kExitOk);
  std::ostringstream table;
  ASSERT_EQ(cmd_compare({(dir_ / "out-proxy_pool").string(), (dir_ / "out-replicating_router").string()},
                        std::nullopt, table, err_),
            kExitOk);
  EXPECT_NE(table.str().find("replicating_router"), std::string::npos);
}

TEST_F(Expctl, CapacityCeilingAndSearch) {
  json s = scenario("proxy_pool");
  s["capacity"] = {{"rate_min", 100}, {"rate_max", 800}, {"iterations", 4}, {"duration_s", 2}};
  const auto easy = capacity_probe(parse_scenario(s, nullptr, dir_.string()), 1);
  EXPECT_DOUBLE_EQ(easy.rate, 800);
  EXPECT_EQ(easy.probes.size(), 1u);

  s["topology"]["base_service_time_us"] = 5000;  // 6 nodes: about 1200 req/s
  s["capacity"] = {{"rate_min", 100}, {"rate_max", 50000}, {"iterations", 8}, {"duration_s", 3}};
  const auto hard = capacity_probe(parse_scenario(s, nullptr, dir_.string()), 1);
  EXPECT_GT(hard.rate, 100);
  EXPECT_LT(hard.rate, 1300);
  for (const auto& p : hard.probes) EXPECT_EQ(p.ok, p.rate <= hard.rate) << p.rate;

  s["capacity"]["rate_min"] = 40000;
  EXPECT_DOUBLE_EQ(capacity_probe(parse_scenario(s, nullptr, dir_.string()), 1).rate, 0);

  ASSERT_EQ(cmd_capacity(write("c.json", s), out_, err_), kExitOk);
  EXPECT_NE(out_.str().find("capacity"), std::string::npos);
}

TEST_F(Expctl, RouteFromRunState) {
  json s = scenario("replicating_router");
  s["faults"] = {{{"kind", "crash"}, {"nodes", {0, 1, 2, 3, 4, 5}}, {"start_s", 2}, {"end_s", 100}, {"outside_fault_phase", true}}};
  s["phases"]["recovery_s"] = 0;
  ASSERT_EQ(cmd_run(write("r.json", s), {}, out_, err_), kExitOk) << err_.str();
  const auto state = (dir_ / "out-replicating_router" / "seed-1" / "run_state.json").string();
  std::ostringstream get, set;
  ASSERT_EQ(cmd_route(state, "get", "user:1", 0, get, err_), kExitOk) << err_.str();
  EXPECT_NE(get.str().find("skipped: mc"), std::string::npos) << get.str();  // all TKO at the end
  ASSERT_EQ(cmd_route(state, "set", "user:1", 0, set, err_), kExitOk);
  EXPECT_NE(set.str().find("destinations:"), std::string::npos);
  EXPECT_EQ(cmd_route(state, "delete", "user:1", 0, get, err_), kExitConfig);

  ASSERT_EQ(cmd_run(write("p.json", scenario("proxy_pool")), {}, out_, err_), kExitOk);
  EXPECT_EQ(cmd_route((dir_ / "out-proxy_pool" / "seed-1" / "run_state.json").string(), "get", "k", 0, get, err_),
            kExitConfig);
}

}  // namespace
}  // namespace cachemw
