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

#include "cachemw/strategy_replicating_router.h"

#include <gtest/gtest.h>

#include "cachemw/errors.h"
#include "sim_harness.h"

namespace cachemw {
namespace {

using nlohmann::json;
using testing::Harness;

RouterConfig with(const json& j = json::object()) {
  json s = j;
  s["kind"] = "replicating_router";
  return parse_router_config(s);
}

// 3 pools x 4 slices: pool p holds nodes 4p .. 4p+3.
std::vector<std::vector<NodeId>> pools3x4() { return {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}}; }

TEST(RouterProbe, BackoffSequence) {
  const auto cfg = with({{"jitter_fraction", 0.0}});
  std::vector<Micros> got;
  for (std::size_t k = 0; k < 7; ++k) got.push_back(probe_base_interval(cfg, k) / 1000);
  EXPECT_EQ(got, (std::vector<Micros>{100, 200, 400, 800, 1600, 3000, 3000}));
  EXPECT_EQ(probe_interval(cfg, 2, 0.99), 400'000);
}

TEST(RouterProbe, JitterBound) {
  const auto cfg = with({{"jitter_fraction", 0.5}});
  for (std::size_t k = 0; k < 8; ++k)
    for (double u : {0.0, 0.25, 0.5, 0.999999}) {
      const Micros base = probe_base_interval(cfg, k);
      const Micros v = probe_interval(cfg, k, u);
      EXPECT_GE(v, base);
      EXPECT_LE(static_cast<double>(v), 1.5 * static_cast<double>(base));
    }
  EXPECT_THROW(with({{"jitter_fraction", 0.6}}), ConfigError);
  EXPECT_THROW(with({{"probe_interval_initial_ms", 500}, {"probe_interval_max_ms", 100}}), ConfigError);
}

TEST(RouterHealth, ThresholdResetAndHardTko) {
  const auto cfg = with();
  RouterTable table(cfg, pools3x4());
  HealthTable h(cfg, table, 12);
  using E = HealthTable::Event;
  h.update(1, E::kTimeout);
  h.update(1, E::kTimeout);
  h.update(1, E::kSuccess);
  EXPECT_EQ(h.status(1), Health::kActive);
  EXPECT_EQ(h.soft_errors(1), 0u);
  EXPECT_FALSE(h.update(1, E::kTimeout));
  EXPECT_FALSE(h.update(1, E::kTimeout));
  EXPECT_TRUE(h.update(1, E::kTimeout));
  EXPECT_EQ(h.status(1), Health::kSoftTko);
  EXPECT_TRUE(h.update(2, E::kRefused));
  EXPECT_EQ(h.status(2), Health::kHardTko);
  h.update(1, E::kSuccess);  // any success restores active
  EXPECT_EQ(h.status(1), Health::kActive);
  EXPECT_EQ(h.transitions(1), 2u);
}

TEST(RouterHealth, SoftTkoCapPerSlice) {
  const auto cfg = with({{"maximum_soft_tko", 1}});
  RouterTable table(cfg, pools3x4());
  HealthTable h(cfg, table, 12);
  using E = HealthTable::Event;
  for (int i = 0; i < 3; ++i) h.update(1, E::kTimeout);  // slice 1, pool 0
  for (int i = 0; i < 5; ++i) h.update(5, E::kTimeout);  // slice 1, pool 1
  for (int i = 0; i < 3; ++i) h.update(2, E::kTimeout);  // slice 2
  EXPECT_EQ(h.status(1), Health::kSoftTko);
  EXPECT_EQ(h.status(5), Health::kActive);
  EXPECT_EQ(h.status(2), Health::kSoftTko);
  EXPECT_NO_THROW(h.check_invariants());
  h.set_status(5, Health::kSoftTko);
  EXPECT_THROW(h.check_invariants(), InternalError);
}

TEST(RouterHealth, SoftTkoCapGlobal) {
  const auto cfg = with({{"maximum_soft_tko", 1}, {"soft_tko_scope", "global"}});
  RouterTable table(cfg, pools3x4());
  HealthTable h(cfg, table, 12);
  for (int i = 0; i < 3; ++i) h.update(1, HealthTable::Event::kTimeout);
  for (int i = 0; i < 3; ++i) h.update(2, HealthTable::Event::kTimeout);
  EXPECT_EQ(h.status(1), Health::kSoftTko);
  EXPECT_EQ(h.status(2), Health::kActive);
}

TEST(RouterTable, PrefixLongestMatch) {
  const auto cfg = with({{"prefix_routes", json::array({{{"prefix", "exp:"}, {"pools", {0}}},
                                                        {{"prefix", "a:"}, {"pools", {1}}},
                                                        {{"prefix", "a:b:"}, {"pools", {2}}}})}});
  RouterTable t(cfg, pools3x4());
  EXPECT_EQ(t.pools_for("exp:job1"), (std::vector<std::size_t>{0}));
  EXPECT_EQ(t.pools_for("cheap:x"), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(t.pools_for("a:b:c"), (std::vector<std::size_t>{2}));
  EXPECT_EQ(t.pools_for("a:x"), (std::vector<std::size_t>{1}));
  EXPECT_THROW(with({{"prefix_routes", json::array({{{"prefix", ""}, {"pools", {0}}}})}}), ConfigError);
  const auto bad = with({{"prefix_routes", json::array({{{"prefix", "x"}, {"pools", {7}}}})}});
  EXPECT_THROW(RouterTable(bad, pools3x4()), ConfigError);
}

TEST(RouterTable, AdminRouteReflectsHealth) {
  const auto cfg = with();
  RouterTable t(cfg, pools3x4());
  HealthTable h(cfg, t, 12);
  const std::string key = "user:42";
  const auto slice = t.slice_of(key);
  const auto order = t.read_order(3, key);
  auto r = admin_route(t, h, Op::kGet, key, 3);
  ASSERT_EQ(r.destinations.size(), 3u);
  EXPECT_EQ(r.destinations[0], t.destination(order[0], slice));
  h.set_status(r.destinations[0], Health::kSoftTko);
  auto r2 = admin_route(t, h, Op::kGet, key, 3);
  EXPECT_EQ(r2.destinations[0], t.destination(order[1], slice));
  EXPECT_EQ(r2.skipped, (std::vector<NodeId>{r.destinations[0]}));
  auto s = admin_route(t, HealthTable(cfg, t, 12), Op::kSet, key, 3);
  EXPECT_EQ(s.destinations.size(), 3u);
}

json router_topology() { return {{"nodes", 12}, {"groups", 3}, {"middleware_instances", 1}}; }

json router_strategy(const json& extra = json::object()) {
  json s = {{"kind", "replicating_router"}, {"cpu_us_per_request", 10}, {"cpu_us_per_destination", 5}};
  s.merge_patch(extra);
  return s;
}

TEST(Router, SetReplicatesAndGetFailsOver) {
  Harness h(router_topology(), router_strategy(), {"k"});
  auto& r = h.as<ReplicatingRouterStrategy>();
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 77), Outcome::kDone);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  const auto route = r.route(0, Op::kGet, "k", 0);
  for (NodeId n : route.destinations) EXPECT_TRUE(h.cluster.node(n).store().contains(h.key("k"))) << n;
  h.cluster.crash(route.destinations[0]);
  auto req = h.issue(Op::kGet, "k", 0);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  EXPECT_EQ(h.outcomes.at(req->id), Outcome::kDone);
  EXPECT_EQ(req->reply_digest, 77u);
  EXPECT_EQ(r.health(0).status(route.destinations[0]), Health::kHardTko);
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 78), Outcome::kDone);  // 2 of 3 live
}

TEST(Router, TwoReplicasDownTimesOutSets) {
  Harness h(router_topology(), router_strategy(), {"k"});
  auto& r = h.as<ReplicatingRouterStrategy>();
  const auto dests = r.route(0, Op::kSet, "k", 0).destinations;
  h.cluster.crash(dests[0]);
  h.cluster.crash(dests[1]);
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 5), Outcome::kErrorConn);  // refused before TKO
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 6), Outcome::kErrorTimeout);
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kDone);  // third replica stored it
}

TEST(Router, AllReplicasTimingOutIsMissByDefault) {
  Harness h(router_topology(), router_strategy({{"timeout_ms", 20}}), {"k"});
  for (NodeId n = 0; n < 12; ++n) h.cluster.set_cpu_share(n, 0.001);
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kMiss);
  Harness e(router_topology(), router_strategy({{"timeout_ms", 20}, {"convert_get_errors_to_miss", false}}), {"k"});
  for (NodeId n = 0; n < 12; ++n) e.cluster.set_cpu_share(n, 0.001);
  EXPECT_EQ(e.run(Op::kGet, "k", 0), Outcome::kErrorTimeout);
}

TEST(Router, ProbeRestoresHardTkoAfterRestart) {
  Harness h(router_topology(), router_strategy(), {"k"});
  auto& r = h.as<ReplicatingRouterStrategy>();
  const NodeId d = r.route(0, Op::kGet, "k", 0).destinations[0];
  h.cluster.crash(d);
  h.run(Op::kGet, "k", 0);
  ASSERT_EQ(r.health(0).status(d), Health::kHardTko);
  h.kernel.run_until(h.kernel.now() + 2'000'000);
  EXPECT_EQ(r.health(0).status(d), Health::kHardTko);
  EXPECT_GT(r.health(0).probe_attempt(d), 2u);
  h.cluster.restart(d);
  h.kernel.run_until(h.kernel.now() + 5'000'000);
  EXPECT_EQ(r.health(0).status(d), Health::kActive);
  EXPECT_EQ(r.health(0).probe_attempt(d), 0u);
}

TEST(Router, SameSliceOverloadFlaps) {
  Harness h(router_topology(), router_strategy({{"timeout_ms", 20}}), {"k"}, 30);
  auto& r = h.as<ReplicatingRouterStrategy>();
  const auto dests = r.route(0, Op::kSet, "k", 0).destinations;
  h.cluster.set_cpu_share(dests[0], 0.007);  // about 14 ms service
  h.cluster.set_cpu_share(dests[1], 0.007);
  for (int i = 0; i < 400; ++i) {
    h.issue(i % 5 == 0 ? Op::kSet : Op::kGet, "k", static_cast<std::uint32_t>(i % 30), 1 + i);
    if (i % 5 == 4) h.kernel.run_until(h.kernel.now() + 100'000);  // bursts of 5
  }
  h.kernel.run_until(h.kernel.now() + 3'000'000);
  EXPECT_GE(r.health(0).transitions(dests[0]) + r.health(0).transitions(dests[1]), 3u);
  EXPECT_NO_THROW(r.health(0).check_invariants());
  EXPECT_EQ(r.occupied(), 0u);
}

}  // namespace
}  // namespace cachemw
