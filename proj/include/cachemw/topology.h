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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cachenode.h"
#include "cachemw/hashing.h"

namespace cachemw {

enum class StrategyKind { kProxyPool, kReplicatingRouter, kTokenRing };

StrategyKind parse_strategy_kind(const std::string& name);
std::string to_string(StrategyKind kind);

using LinkId = std::uint32_t;

struct NodeSpec {
  NodeId id = 0;
  std::string name;
  std::uint64_t memory_budget = 0;
  Micros base_service_time = 0;
  LinkId link = 0;
  std::uint32_t host = 0;
};

// Egress uplink of one host, shared by its nodes.
struct LinkSpec {
  LinkId id = 0;
  double bandwidth_bps = 0;
};

// A pool (router strategies) or rack (token ring). Node order is significant:
// position i is the node's slice index within the group.
struct Group {
  std::string name;
  std::vector<NodeId> nodes;
};

struct ClusterTopology {
  StrategyKind kind = StrategyKind::kProxyPool;
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<Group> groups;
  std::vector<std::vector<NodeId>> hosts;
  std::size_t middleware_instances = 1;
  std::size_t replication_factor = 1;
  TokenMap token_map;  // token ring only

  // Group index of each node.
  std::vector<std::uint32_t> group_of;

  std::size_t node_count() const { return nodes.size(); }
  // Slice index of a node inside its group.
  std::size_t slice_of(NodeId node) const;
};

/// Builds and validates a topology from the scenario's `topology` section.
/// Throws ConfigError naming the violated rule.
///
/// Keys: nodes (count), memory_budget_bytes, base_service_time_us,
/// link_bandwidth_bps, groups (count or list of node-id lists),
/// host_group_size or hosts (list of node-id lists), middleware_instances,
/// replication_factor, tokens (object: node id -> token, token ring only).
ClusterTopology build_topology(const nlohmann::json& section, StrategyKind kind);

}  // namespace cachemw
