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

// Mcrouter-style middleware: writes replicated to every pool and acknowledged
// at a majority, reads from one per-client replica with failover, soft/hard
// TKO health tracking with jittered exponential probes, prefix routing and an
// admin route query.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "cachemw/hashing.h"
#include "cachemw/strategy.h"

namespace cachemw {

enum class SoftTkoScope { kGlobal, kPerPool, kPerSlice };

struct PrefixRule {
  std::string prefix;
  std::vector<std::size_t> pools;
};

struct RouterConfig {
  HashFunction hash = HashFunction::kCrc32;
  std::size_t points_per_server = HashRing::kDefaultPointsPerServer;
  std::size_t failures_until_tko = 3;
  std::size_t maximum_soft_tko = 1;
  SoftTkoScope soft_tko_scope = SoftTkoScope::kPerSlice;
  Micros probe_interval_initial = 100'000;
  Micros probe_interval_max = 3'000'000;
  double jitter_fraction = 0.5;
  Micros timeout = 100'000;
  TimeoutFrom timeout_from = TimeoutFrom::kEnqueue;
  bool convert_get_errors_to_miss = true;
  std::size_t inflight_budget = 256;
  std::size_t pipeline_depth = 1;
  Micros cpu_us_per_request = 100;
  Micros cpu_us_per_destination = 50;
  std::vector<PrefixRule> prefix_routes;
};

RouterConfig parse_router_config(const nlohmann::json& section);
nlohmann::json router_config_json(const RouterConfig& cfg);

enum class Health { kActive, kSoftTko, kHardTko };
std::string to_string(Health h);

/// Probe interval k (0-based) before jitter: min(initial * 2^k, max).
Micros probe_base_interval(const RouterConfig& cfg, std::size_t attempt);
/// Base interval stretched by jitter_fraction * u, u in [0, 1). Throws
/// InternalError if the result leaves [base, 1.5 * base].
Micros probe_interval(const RouterConfig& cfg, std::size_t attempt, double u);

// Static placement: pools, slice ring, prefix table, per-client replica.
class RouterTable {
 public:
  RouterTable(const RouterConfig& cfg, std::vector<std::vector<NodeId>> pools);

  /// Pools serving a key: longest matching prefix rule, else all pools.
  const std::vector<std::size_t>& pools_for(std::string_view key) const;
  std::size_t slice_of(std::string_view key) const;
  NodeId destination(std::size_t pool, std::size_t slice) const { return pools_.at(pool).at(slice); }
  /// Pools in failover order for a client: its primary first.
  std::vector<std::size_t> read_order(std::uint32_t client, std::string_view key) const;

  std::size_t pool_count() const { return pools_.size(); }
  std::size_t slice_count() const { return pools_.empty() ? 0 : pools_[0].size(); }
  const std::vector<std::vector<NodeId>>& pools() const { return pools_; }

 private:
  const RouterConfig* cfg_;
  std::vector<std::vector<NodeId>> pools_;
  HashRing ring_;
  std::vector<std::size_t> all_pools_;
};

// Health of every destination as seen by one router instance.
class HealthTable {
 public:
  HealthTable(const RouterConfig& cfg, const RouterTable& table, std::size_t nodes);

  Health status(NodeId n) const { return dest_.at(n).status; }
  bool tko(NodeId n) const { return dest_.at(n).status != Health::kActive; }
  std::size_t soft_errors(NodeId n) const { return dest_.at(n).soft_errors; }
  std::size_t transitions(NodeId n) const { return dest_.at(n).soft_transitions; }
  std::size_t probe_attempt(NodeId n) const { return dest_.at(n).probe_attempt; }

  enum class Event { kSuccess, kTimeout, kRefused };
  /// Applies one request outcome; a success restores active. Returns true
  /// when the destination just entered a TKO state and needs a probe.
  bool update(NodeId n, Event e);
  /// Probe result; returns true when the destination is active again.
  bool probe_result(NodeId n, bool ok);

  std::size_t soft_tko_in_scope(NodeId n) const;
  // Checks the soft TKO cap in every scope; throws InternalError.
  void check_invariants() const;

  void set_status(NodeId n, Health h);  // introspection/testing
  std::vector<Health> snapshot() const;

 private:
  struct Dest {
    Health status = Health::kActive;
    std::size_t soft_errors = 0;
    std::size_t probe_attempt = 0;
    std::size_t soft_transitions = 0;
  };
  std::size_t scope_key(NodeId n) const;

  const RouterConfig* cfg_;
  std::vector<Dest> dest_;
  std::vector<std::size_t> pool_of_, slice_of_;
};

struct RouteReport {
  Op op = Op::kGet;
  std::vector<NodeId> destinations;  // in the order they would be tried
  std::vector<NodeId> skipped;       // in TKO right now
};

/// Side-effect-free route query against a table and a health view.
RouteReport admin_route(const RouterTable& table, const HealthTable& health, Op op,
                        std::string_view key, std::uint32_t client);

class ReplicatingRouterStrategy : public Strategy {
 public:
  ReplicatingRouterStrategy(RouterConfig cfg, SimContext& ctx);

  void warm(KeyId key, std::uint32_t size, std::uint64_t digest) override;
  void submit(const RequestPtr& req) override;
  nlohmann::json stats() const override;
  nlohmann::json route_state() const override;
  std::size_t occupied() const override;

  const RouterTable& table() const { return table_; }
  const HealthTable& health(std::size_t instance) const { return instances_.at(instance)->health; }
  RouteReport route(std::size_t instance, Op op, std::string_view key, std::uint32_t client) const;

 private:
  struct Instance {
    Instance(const RouterConfig& cfg, const RouterTable& table, SimContext& ctx, std::uint64_t seed);
    HealthTable health;
    InflightBudget budget;
    MiddlewareCpu cpu;
    ConnectionPool conns;
    std::mt19937_64 jitter;
    std::vector<bool> probing;
  };
  struct GetState;
  struct SetState;

  void start(std::size_t inst, const RequestPtr& req);
  void try_get(std::size_t inst, const std::shared_ptr<GetState>& st);
  void do_set(std::size_t inst, const RequestPtr& req);
  void finish(std::size_t inst, const RequestPtr& req, Outcome o);
  void note(std::size_t inst, NodeId n, HealthTable::Event e);
  void schedule_probe(std::size_t inst, NodeId n);

  RouterConfig cfg_;
  SimContext* ctx_;
  RouterTable table_;
  std::vector<std::size_t> key_slice_;
  std::vector<std::unique_ptr<Instance>> instances_;
  std::uint64_t probes_ = 0;
};

}  // namespace cachemw
