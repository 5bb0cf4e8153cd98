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

#include "cachemw/cluster.h"

#include <gtest/gtest.h>

#include <string>
#include <vector>

namespace cachemw {
namespace {

using nlohmann::json;

ClusterTopology small(double bw = 1e6) {
  return build_topology(
      json{{"nodes", 2}, {"base_service_time_us", 100}, {"link_bandwidth_bps", bw}, {"host_group_size", 1}},
      StrategyKind::kProxyPool);
}

NetworkParams plain() {
  NetworkParams n;
  n.propagation_us = 10;
  n.header_bytes = 0;
  n.unshaped_bandwidth_bps = 1e12;
  return n;
}

TEST(Cluster, GetLatencyAddsUpHops) {
  Kernel k;
  auto topo = small();
  Cluster c(k, topo, plain(), 10);
  c.node(0).store().set(7, 125, 99);  // 1000 bits = 1000 us at 1 Mbps
  Reply got;
  Micros at = -1;
  c.memcached(0, 0, MemOp::kGet, 7, 0, 0, 0, nullptr, [&](Reply r) {
    got = r;
    at = k.now();
  });
  k.run_all();
  EXPECT_EQ(got.kind, Reply::kHit);
  EXPECT_EQ(got.digest, 99u);
  EXPECT_EQ(at, 10 + 100 + 1000 + 10);
}

TEST(Cluster, DownNodeRefuses) {
  Kernel k;
  auto topo = small();
  Cluster c(k, topo, plain(), 10);
  c.crash(1);
  Reply got{Reply::kHit, 0};
  c.memcached(1, 0, MemOp::kGet, 1, 0, 0, 0, nullptr, [&](Reply r) { got = r; });
  k.run_all();
  EXPECT_EQ(got.kind, Reply::kRefused);
}

TEST(Cluster, CrashLosesQueuedWork) {
  Kernel k;
  auto topo = small();
  Cluster c(k, topo, plain(), 10);
  std::vector<bool> results;
  c.run_on(0, 1000, [&](bool ok) { results.push_back(ok); });
  k.after(500, [&] { c.crash(0); });
  k.run_all();
  EXPECT_EQ(results, std::vector<bool>{false});
  c.restart(0);
  c.run_on(0, 10, [&](bool ok) { results.push_back(ok); });
  k.run_all();
  EXPECT_EQ(results.back(), true);
}

TEST(Cluster, CpuIsFifoAndShareScales) {
  Kernel k;
  auto topo = small();
  Cluster c(k, topo, plain(), 10);
  c.set_cpu_share(0, 0.1);
  std::vector<Micros> done;
  for (int i = 0; i < 3; ++i) c.run_on(0, 50, [&](bool) { done.push_back(k.now()); });
  k.run_all();
  EXPECT_EQ(done, (std::vector<Micros>{500, 1000, 1500}));
}

TEST(Cluster, LinkServesFlowsRoundRobin) {
  Kernel k;
  auto topo = small(1e6);
  Cluster c(k, topo, plain(), 10);
  std::vector<std::string> order;
  for (int i = 0; i < 3; ++i)
    c.transmit(0, 1, 100, nullptr, [&, i] { order.push_back("a" + std::to_string(i)); });
  c.transmit(0, 2, 100, nullptr, [&] { order.push_back("b0"); });
  k.run_all();
  EXPECT_EQ(order, (std::vector<std::string>{"a0", "b0", "a1", "a2"}));
}

TEST(Cluster, UnwantedMessagesSkipTheLink) {
  Kernel k;
  auto topo = small(1e6);
  Cluster c(k, topo, plain(), 10);
  std::vector<Micros> at;
  c.transmit(0, 1, 1000, nullptr, [&] { at.push_back(k.now()); });
  c.transmit(0, 1, 1000, [] { return false; }, [&] { at.push_back(-1); });
  c.transmit(0, 1, 1000, nullptr, [&] { at.push_back(k.now()); });
  k.run_all();
  EXPECT_EQ(at, (std::vector<Micros>{1000, 2000}));
}

TEST(Cluster, ThrottleDividesBandwidth) {
  Kernel k;
  auto topo = small(1e6);
  Cluster c(k, topo, plain(), 10);
  c.set_link_factor(0, 10);
  Micros at = -1;
  c.transmit(0, 1, 1000, nullptr, [&] { at = k.now(); });
  k.run_all();
  EXPECT_EQ(at, 10'000);
  EXPECT_TRUE(c.degraded(0));
  EXPECT_FALSE(c.degraded(1));
}

TEST(Cluster, HostNodesShareOneUplink) {
  Kernel k;
  auto topo = build_topology(json{{"nodes", 2}, {"link_bandwidth_bps", 1e6}, {"host_group_size", 2}},
                             StrategyKind::kProxyPool);
  ASSERT_EQ(topo.links.size(), 1u);
  Cluster c(k, topo, plain(), 10);
  std::vector<Micros> at;
  c.transmit(0, 1, 1000, nullptr, [&] { at.push_back(k.now()); });
  c.transmit(1, 2, 1000, nullptr, [&] { at.push_back(k.now()); });
  k.run_all();
  EXPECT_EQ(at, (std::vector<Micros>{1000, 2000}));
  c.set_link_factor(0, 4);
  EXPECT_TRUE(c.degraded(0));
  EXPECT_TRUE(c.degraded(1));
}

TEST(Cluster, UsageAccounting) {
  Kernel k;
  auto topo = small(1e6);
  Cluster c(k, topo, plain(), 3);
  k.run_until(900'000);
  c.run_on(0, 200'000, [](bool) {});
  k.run_all();
  EXPECT_NEAR(c.usage(0).cpu_work_us[0], 100'000, 1);
  EXPECT_NEAR(c.usage(0).cpu_work_us[1], 100'000, 1);
  c.set_cpu_share(1, 0.25);
  auto hog = c.hog_seconds(1);
  EXPECT_NEAR(hog[0], 0.0, 1e-9);
  EXPECT_NEAR(hog[1], 0.75 * 0.9, 1e-9);
  EXPECT_NEAR(hog[2], 0.75, 1e-9);
}

}  // namespace
}  // namespace cachemw
