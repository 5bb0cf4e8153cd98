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

// Twemproxy-style middleware: one pool sharded by hash + distribution,
// auto-ejection after consecutive failures, periodic retry, and timeout to
// miss conversion for gets. No replication.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cachemw/hashing.h"
#include "cachemw/strategy.h"

namespace cachemw {

enum class Distribution { kKetama, kModula, kRandom };

struct ProxyConfig {
  HashFunction hash = HashFunction::kFnv1a64;
  Distribution distribution = Distribution::kKetama;
  std::optional<std::pair<std::string, std::string>> hashtag;
  std::size_t points_per_server = HashRing::kDefaultPointsPerServer;
  bool auto_eject = true;
  std::size_t server_failure_limit = 2;
  Micros server_retry_timeout = 30'000'000;
  Micros timeout = 400'000;
  TimeoutFrom timeout_from = TimeoutFrom::kSend;
  std::size_t inflight_budget = 256;
  std::size_t pipeline_depth = 1;
  Micros cpu_us_per_request = 50;
};

ProxyConfig parse_proxy_config(const nlohmann::json& section);

// Liveness view of one proxy instance over the pool.
class ProxyRouting {
 public:
  ProxyRouting(const ProxyConfig& cfg, std::vector<std::string> server_names, std::uint64_t seed);

  /// Server for a key hash over the live set. Throws NoLiveServersError.
  ServerId route(KeyHash hash);
  KeyHash hash(std::string_view key) const;

  /// Counts a failure; returns true when it ejected the server.
  bool on_failure(ServerId s);
  void on_success(ServerId s);
  void readd(ServerId s);

  bool ejected(ServerId s) const { return state_.at(s).ejected; }
  std::size_t consecutive_failures(ServerId s) const { return state_.at(s).failures; }
  const std::vector<ServerId>& live() const { return live_; }

 private:
  struct ServerState {
    std::size_t failures = 0;
    bool ejected = false;
  };
  void rebuild();

  const ProxyConfig* cfg_;
  std::vector<std::string> names_;
  std::vector<ServerState> state_;
  std::vector<ServerId> live_;
  HashRing ring_;
  std::mt19937_64 rng_;
};

class ProxyPoolStrategy : public Strategy {
 public:
  ProxyPoolStrategy(ProxyConfig cfg, SimContext& ctx);

  void warm(KeyId key, std::uint32_t size, std::uint64_t digest) override;
  void submit(const RequestPtr& req) override;
  nlohmann::json stats() const override;
  std::size_t occupied() const override;

  const ProxyRouting& routing(std::size_t instance) const { return instances_.at(instance)->routing; }

 private:
  struct Instance {
    Instance(const ProxyConfig& cfg, SimContext& ctx, std::vector<std::string> names,
             std::uint64_t seed);
    ProxyRouting routing;
    InflightBudget budget;
    MiddlewareCpu cpu;
    ConnectionPool conns;
    std::vector<bool> probing;
  };

  void process(std::size_t inst, const RequestPtr& req);
  void eject(std::size_t inst, ServerId s);
  void probe(std::size_t inst, ServerId s);

  ProxyConfig cfg_;
  SimContext* ctx_;
  std::vector<KeyHash> key_hash_;
  std::vector<std::unique_ptr<Instance>> instances_;
  std::uint64_t ejections_ = 0;
  std::uint64_t readds_ = 0;
};

}  // namespace cachemw
