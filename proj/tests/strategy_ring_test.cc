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

#include "cachemw/strategy_token_ring.h"

#include <gtest/gtest.h>

#include "cachemw/errors.h"
#include "sim_harness.h"

namespace cachemw {
namespace {

using nlohmann::json;
using testing::Harness;

RackResponse hit(RackId r, std::uint64_t d, bool local = false) { return {r, {Reply::kHit, d}, local}; }
RackResponse miss(RackId r, bool local = false) { return {r, {Reply::kMiss, 0}, local}; }
RackResponse refused(RackId r, bool local = false) { return {r, {Reply::kRefused, 0}, local}; }
RackResponse stored(RackId r) { return {r, {Reply::kStored, 0}, false}; }

TEST(RingQuorum, Arithmetic) {
  EXPECT_EQ(quorum_required(1), 1u);
  EXPECT_EQ(quorum_required(2), 2u);
  EXPECT_EQ(quorum_required(3), 2u);
  EXPECT_EQ(quorum_required(4), 3u);
  EXPECT_EQ(quorum_required(5), 3u);
}

TEST(RingResolve, GetAgreement) {
  const auto q = Consistency::kQuorum;
  EXPECT_EQ(resolve_get({hit(0, 5), hit(1, 5)}, 3, q, true).kind, Resolution::kHit);
  EXPECT_EQ(resolve_get({hit(0, 5), hit(1, 5)}, 3, q, true).digest, 5u);
  EXPECT_EQ(resolve_get({hit(0, 5), miss(1)}, 3, q, true).kind, Resolution::kPending);
  EXPECT_EQ(resolve_get({hit(0, 5), miss(1), miss(2)}, 3, q, true).kind, Resolution::kMiss);
  EXPECT_EQ(resolve_get({hit(0, 5), hit(1, 6)}, 3, q, true).kind, Resolution::kPending);
}

TEST(RingResolve, GetDivergence) {
  const std::vector<RackResponse> div = {hit(1, 6), hit(0, 5, true), miss(2)};
  EXPECT_EQ(resolve_get(div, 3, Consistency::kQuorum, true).digest, 5u);
  EXPECT_EQ(resolve_get(div, 3, Consistency::kQuorum, false).digest, 6u);
  EXPECT_EQ(resolve_get(div, 3, Consistency::kSafeQuorum, true).kind, Resolution::kQuorumError);
  EXPECT_EQ(resolve_get({hit(1, 6), refused(0, true), hit(2, 7)}, 3, Consistency::kQuorum, true).kind,
            Resolution::kQuorumError);
}

TEST(RingResolve, TooFewValid) {
  EXPECT_EQ(resolve_get({refused(0), refused(1), hit(2, 1)}, 3, Consistency::kQuorum, true).kind,
            Resolution::kQuorumError);
  EXPECT_EQ(resolve_get({refused(0, true), hit(1, 1)}, 2, Consistency::kQuorum, true).kind,
            Resolution::kQuorumError);
}

TEST(RingResolve, Sets) {
  EXPECT_EQ(resolve_set({stored(0), stored(1)}, 3).kind, Resolution::kStored);
  EXPECT_EQ(resolve_set({stored(0), refused(1)}, 3).kind, Resolution::kPending);
  EXPECT_EQ(resolve_set({stored(0), refused(1), refused(2)}, 3).kind, Resolution::kQuorumError);
  EXPECT_EQ(resolve_set({stored(0)}, 1).kind, Resolution::kStored);
}

TEST(RingConfig, Validation) {
  EXPECT_THROW(parse_ring_config({{"kind", "token_ring"}, {"consistency", "ALL"}}), ConfigError);
  EXPECT_THROW(parse_ring_config({{"kind", "token_ring"}, {"timeout_ms", 0}}), ConfigError);
  EXPECT_THROW(parse_ring_config({{"kind", "token_ring"}, {"extra", 1}}), ConfigError);
  EXPECT_EQ(parse_ring_config({{"kind", "token_ring"}}).consistency, Consistency::kQuorum);
}

json ring_topology(int nodes = 6, int racks = 3) { return {{"nodes", nodes}, {"groups", racks}}; }

json ring_strategy(const json& extra = json::object()) {
  json s = {{"kind", "token_ring"}};
  s.merge_patch(extra);
  return s;
}

TEST(Ring, SetThenGetAcrossRacks) {
  Harness h(ring_topology(), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 9), Outcome::kDone);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  for (RackId rack : r.eligible_racks())
    EXPECT_TRUE(h.cluster.node(r.owner(rack, h.key("k"))).store().contains(h.key("k")));
  auto req = h.issue(Op::kGet, "k", 1);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  EXPECT_EQ(h.outcomes.at(req->id), Outcome::kDone);
  EXPECT_EQ(req->reply_digest, 9u);
}

TEST(Ring, OwnersDownInTwoRacksIsQuorumError) {
  Harness h(ring_topology(), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  const NodeId entry = r.entry_node(0);
  const RackId local = h.topo.group_of.at(entry);
  std::size_t crashed = 0;
  for (RackId rack : r.eligible_racks()) {
    const NodeId o = r.owner(rack, h.key("k"));
    if (rack != local && o != entry && crashed < 2) {
      h.cluster.crash(o);
      ++crashed;
    }
  }
  ASSERT_EQ(crashed, 2u);
  EXPECT_EQ(r.eligible_racks().size(), 3u);  // each rack keeps a live node
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 1), Outcome::kErrorQuorum);
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kErrorQuorum);
}

TEST(Ring, WholeRackDownLeavesTwoEligible) {
  Harness h(ring_topology(), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  const RackId local = h.topo.group_of.at(r.entry_node(0));
  const RackId gone = (local + 1) % 3;
  for (NodeId n : h.topo.groups.at(gone).nodes) h.cluster.crash(n);
  EXPECT_EQ(r.eligible_racks().size(), 2u);
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 4), Outcome::kDone);
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kDone);
}

TEST(Ring, TwoRacksLocalOwnerDown) {
  Harness h(ring_topology(4, 2), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  const NodeId entry = r.entry_node(0);
  const NodeId o = r.owner(h.topo.group_of.at(entry), h.key("k"));
  if (o == entry) GTEST_SKIP() << "coordinator owns the key";
  h.cluster.crash(o);
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kErrorQuorum);
}

TEST(Ring, CrashedCoordinatorIsNotRetried) {
  Harness h(ring_topology(), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  h.cluster.crash(r.entry_node(0));
  EXPECT_EQ(h.run(Op::kGet, "k", 0), Outcome::kErrorConn);
  EXPECT_EQ(h.run(Op::kSet, "k", 0, 3), Outcome::kErrorConn);
  EXPECT_EQ(r.addressed_to_down(), 2u);
  EXPECT_EQ(h.run(Op::kGet, "k", 1), Outcome::kMiss);  // other entries work

  // Crash while the request is in flight.
  Harness m(ring_topology(), ring_strategy(), {"k"});
  auto& rm = m.as<TokenRingStrategy>();
  auto req = m.issue(Op::kGet, "k", 0);
  m.kernel.run_until(m.kernel.now() + 60);
  m.cluster.crash(rm.entry_node(0));
  m.kernel.run_until(m.kernel.now() + 1'000'000);
  EXPECT_EQ(m.outcomes.at(req->id), Outcome::kErrorConn);
  EXPECT_EQ(rm.addressed_to_down(), 1u);
}

TEST(Ring, DivergentReplicasPreferLocal) {
  for (auto [level, expect] : {std::pair{"DC_QUORUM", Outcome::kDone}, {"DC_SAFE_QUORUM", Outcome::kErrorQuorum}}) {
    Harness h(ring_topology(), ring_strategy({{"consistency", level}}), {"k"});
    auto& r = h.as<TokenRingStrategy>();
    const RackId local = h.topo.group_of.at(r.entry_node(0));
    for (RackId rack = 0; rack < 3; ++rack)
      h.cluster.node(r.owner(rack, h.key("k"))).store().set(h.key("k"), 100, 10 + rack);
    auto req = h.issue(Op::kGet, "k", 0);
    h.kernel.run_until(h.kernel.now() + 1'000'000);
    EXPECT_EQ(h.outcomes.at(req->id), expect) << level;
    if (expect == Outcome::kDone) EXPECT_EQ(req->reply_digest, 10u + local);
  }
}

TEST(Ring, DcOneRepliesLocallyAndConvergesAsync) {
  Harness h(ring_topology(), ring_strategy({{"consistency", "DC_ONE"}}), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  const RackId remote = (h.topo.group_of.at(r.entry_node(0)) + 1) % 3;
  h.cluster.set_cpu_share(r.owner(remote, h.key("k")), 0.01);
  auto req = h.issue(Op::kSet, "k", 0, 21);
  while (!req->finished) h.kernel.run_until(h.kernel.now() + 10);
  EXPECT_EQ(h.outcomes.at(req->id), Outcome::kDone);
  EXPECT_GT(r.async_pending(), 0u);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  EXPECT_EQ(r.async_pending(), 0u);
  for (RackId rack = 0; rack < 3; ++rack) {
    auto d = h.cluster.node(r.owner(rack, h.key("k"))).store().get(h.key("k"));
    EXPECT_EQ(d, std::optional<std::uint64_t>(21));
  }
}

TEST(Ring, DegradedCoordinatorMarksRequest) {
  Harness h(ring_topology(), ring_strategy(), {"k"});
  auto& r = h.as<TokenRingStrategy>();
  h.cluster.set_cpu_share(r.entry_node(0), 0.5);
  auto req = h.issue(Op::kGet, "k", 0);
  h.kernel.run_until(h.kernel.now() + 1'000'000);
  EXPECT_TRUE(req->touched_degraded);
}

}  // namespace
}  // namespace cachemw
