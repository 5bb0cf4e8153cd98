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

#include "cachemw/topology.h"

#include <algorithm>
#include <optional>

#include "cachemw/errors.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

StrategyKind parse_strategy_kind(const std::string& name) {
  if (name == "proxy_pool") return StrategyKind::kProxyPool;
  if (name == "replicating_router") return StrategyKind::kReplicatingRouter;
  if (name == "token_ring") return StrategyKind::kTokenRing;
  throw ConfigError("unknown strategy kind '" + name + "'");
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kProxyPool: return "proxy_pool";
    case StrategyKind::kReplicatingRouter: return "replicating_router";
    case StrategyKind::kTokenRing: return "token_ring";
  }
  return "?";
}

std::size_t ClusterTopology::slice_of(NodeId node) const {
  const auto& g = groups.at(group_of.at(node)).nodes;
  return static_cast<std::size_t>(std::find(g.begin(), g.end(), node) - g.begin());
}

namespace {

std::vector<std::vector<NodeId>> parse_id_lists(const json& j, const std::string& where,
                                                std::size_t n_nodes) {
  std::vector<std::vector<NodeId>> lists;
  if (!j.is_array()) throw ConfigError(where + " must be a count or a list of node lists");
  for (const auto& item : j) {
    if (!item.is_array()) throw ConfigError(where + " entries must be node-id lists");
    std::vector<NodeId> ids;
    for (const auto& id : item) {
      if (!id.is_number_integer() || id.get<std::int64_t>() < 0)
        throw ConfigError(where + " node ids must be unsigned");
      auto v = id.get<std::uint64_t>();
      if (v >= n_nodes) throw ConfigError(where + " references unknown node " + std::to_string(v));
      ids.push_back(static_cast<NodeId>(v));
    }
    lists.push_back(std::move(ids));
  }
  return lists;
}

std::vector<std::vector<NodeId>> contiguous(std::size_t n_nodes, std::size_t parts) {
  std::vector<std::vector<NodeId>> out(parts);
  for (std::size_t i = 0; i < n_nodes; ++i) out[i * parts / n_nodes].push_back(static_cast<NodeId>(i));
  return out;
}

std::uint64_t parse_token(const json& v) {
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))
    return v.get<std::uint64_t>();
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      auto s = v.get<std::string>();
      auto t = std::stoull(s, &pos, 0);
      if (pos == s.size()) return t;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("tokens must be unsigned 64-bit integers");
}

}  // namespace

ClusterTopology build_topology(const json& section, StrategyKind kind) {
  const std::string where = "topology";
  check_keys(section, where,
             {"nodes", "memory_budget_bytes", "base_service_time_us", "link_bandwidth_bps",
              "groups", "host_group_size", "hosts", "middleware_instances",
              "replication_factor", "tokens"});
  ClusterTopology topo;
  topo.kind = kind;

  const auto n = get_or<std::size_t>(section, "nodes", 0, where);
  if (n == 0) throw ConfigError("topology must have at least one node");
  const auto budget = get_or<std::uint64_t>(section, "memory_budget_bytes", 64ull << 20, where);
  const auto base = get_or<Micros>(section, "base_service_time_us", 100, where);
  const auto bw = get_or<double>(section, "link_bandwidth_bps", 1e9, where);
  if (budget == 0) throw ConfigError("memory_budget_bytes must be > 0");
  if (base <= 0) throw ConfigError("base_service_time_us must be > 0");
  if (bw <= 0) throw ConfigError("link_bandwidth_bps must be > 0");

  // hosts
  if (section.contains("hosts")) {
    topo.hosts = parse_id_lists(section.at("hosts"), "topology.hosts", n);
  } else {
    auto per_host = get_or<std::size_t>(section, "host_group_size", 5, where);
    if (per_host == 0) throw ConfigError("host_group_size must be >= 1");
    for (std::size_t i = 0; i < n; i += per_host) {
      std::vector<NodeId> h;
      for (std::size_t j = i; j < std::min(n, i + per_host); ++j) h.push_back(static_cast<NodeId>(j));
      topo.hosts.push_back(std::move(h));
    }
  }
  std::vector<int> host_of(n, -1);
  for (std::size_t h = 0; h < topo.hosts.size(); ++h)
    for (NodeId id : topo.hosts[h]) {
      if (host_of[id] >= 0) throw ConfigError("node " + std::to_string(id) + " is in two hosts");
      host_of[id] = static_cast<int>(h);
    }
  for (std::size_t i = 0; i < n; ++i)
    if (host_of[i] < 0) throw ConfigError("node " + std::to_string(i) + " has no host");

  for (std::size_t i = 0; i < n; ++i) {
    NodeSpec spec;
    spec.id = static_cast<NodeId>(i);
    spec.name = "mc" + std::to_string(i);
    spec.memory_budget = budget;
    spec.base_service_time = base;
    spec.link = static_cast<LinkId>(host_of[i]);
    spec.host = static_cast<std::uint32_t>(host_of[i]);
    topo.nodes.push_back(spec);
  }
  for (std::size_t h = 0; h < topo.hosts.size(); ++h) topo.links.push_back({static_cast<LinkId>(h), bw});

  // groups
  std::vector<std::vector<NodeId>> groups;
  const json groups_j = section.contains("groups") ? section.at("groups") : json(1);
  if (groups_j.is_number_integer()) {
    auto count = groups_j.get<std::int64_t>();
    if (count <= 0 || static_cast<std::size_t>(count) > n) throw ConfigError("groups count must be in [1, nodes]");
    groups = contiguous(n, static_cast<std::size_t>(count));
  } else {
    groups = parse_id_lists(groups_j, "topology.groups", n);
  }
  topo.group_of.assign(n, UINT32_MAX);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ConfigError("group " + std::to_string(g) + " is empty");
    for (NodeId id : groups[g]) {
      if (topo.group_of[id] != UINT32_MAX)
        throw ConfigError("groups overlap: node " + std::to_string(id) + " is in two groups");
      topo.group_of[id] = static_cast<std::uint32_t>(g);
    }
    std::string prefix = kind == StrategyKind::kTokenRing ? "rack" : "pool";
    topo.groups.push_back({prefix + std::to_string(g), groups[g]});
  }
  for (std::size_t i = 0; i < n; ++i)
    if (topo.group_of[i] == UINT32_MAX)
      throw ConfigError("groups must partition the nodes: node " + std::to_string(i) + " is in none");

  topo.middleware_instances = get_or<std::size_t>(section, "middleware_instances", 1, where);
  if (kind == StrategyKind::kTokenRing) topo.middleware_instances = n;
  if (topo.middleware_instances == 0) throw ConfigError("middleware_instances must be >= 1");

  topo.replication_factor = get_or<std::size_t>(section, "replication_factor", groups.size(), where);
  switch (kind) {
    case StrategyKind::kProxyPool:
      if (groups.size() != 1) throw ConfigError("proxy_pool uses exactly one pool");
      if (topo.replication_factor != 1) throw ConfigError("proxy_pool does not replicate: replication_factor must be 1");
      break;
    case StrategyKind::kReplicatingRouter:
      if (topo.replication_factor != groups.size())
        throw ConfigError("replication_factor must equal the number of pools");
      for (const auto& g : groups)
        if (g.size() != groups.front().size())
          throw ConfigError("replica pools must have equal sizes");
      break;
    case StrategyKind::kTokenRing:
      if (topo.replication_factor != groups.size())
        throw ConfigError("replication_factor must equal the number of racks");
      break;
  }

  if (section.contains("tokens") && kind != StrategyKind::kTokenRing)
    throw ConfigError("tokens are only valid for token_ring");
  if (kind == StrategyKind::kTokenRing) {
    if (section.contains("tokens")) {
      const auto& tj = section.at("tokens");
      if (!tj.is_object()) throw ConfigError("topology.tokens must map node ids to tokens");
      std::vector<std::optional<std::uint64_t>> tok(n);
      for (auto it = tj.begin(); it != tj.end(); ++it) {
        std::size_t id = 0;
        try {
          id = std::stoul(it.key());
        } catch (const std::exception&) {
          throw ConfigError("token key '" + it.key() + "' is not a node id");
        }
        if (id >= n) throw ConfigError("token for unknown node " + it.key());
        tok[id] = parse_token(it.value());
      }
      for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<std::pair<std::uint64_t, NodeId>> entries;
        for (NodeId id : groups[g]) {
          if (!tok[id])
            throw ConfigError("uncovered token range: node " + std::to_string(id) + " in rack " +
                              std::to_string(g) + " has no token");
          entries.push_back({*tok[id], id});
        }
        std::sort(entries.begin(), entries.end());
        for (std::size_t i = 1; i < entries.size(); ++i)
          if (entries[i].first == entries[i - 1].first)
            throw ConfigError("duplicate token in rack " + std::to_string(g));
        for (auto [t, id] : entries) topo.token_map.add(static_cast<RackId>(g), t, id);
      }
    } else {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        auto tokens = TokenMap::even_tokens(groups[g].size());
        for (std::size_t i = 0; i < tokens.size(); ++i)
          topo.token_map.add(static_cast<RackId>(g), tokens[i], groups[g][i]);
      }
    }
  }
  return topo;
}

}  // namespace cachemw
