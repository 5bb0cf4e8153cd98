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

// Shared plumbing for the three middleware strategies: the request record,
// the per-run context, and helpers for middleware CPU and server calls.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cluster.h"
#include "cachemw/metrics.h"
#include "cachemw/simkernel.h"
#include "cachemw/workload.h"

namespace cachemw {

struct Request {
  std::uint64_t id = 0;
  std::uint32_t client = 0;
  Op op = Op::kGet;
  KeyId key = 0;
  std::uint32_t size = 0;
  std::uint64_t digest = 0;
  Micros issued = 0;
  bool finished = false;
  bool touched_degraded = false;
  std::uint64_t reply_digest = 0;  // digest a get returned
};
using RequestPtr = std::shared_ptr<Request>;

class SimContext {
 public:
  SimContext(Kernel& kernel, Cluster& cluster, Recorder& recorder, const KeySpace& keys,
             const WorkloadConfig& workload, std::uint64_t seed)
      : kernel(kernel), cluster(cluster), recorder(recorder), keys(keys), workload(workload), seed(seed) {}

  Kernel& kernel;
  Cluster& cluster;
  Recorder& recorder;
  const KeySpace& keys;
  const WorkloadConfig& workload;
  std::uint64_t seed;

  /// Records the first terminal outcome of a request; later ones are ignored.
  void finish(const RequestPtr& req, Outcome outcome);
  /// Time a request sent now reaches the middleware; one client's requests
  /// arrive in the order they were sent.
  Micros client_arrival(std::uint32_t client, std::uint32_t payload_bytes);
  /// Middleware-to-client hop, then finish().
  void reply_to_client(const RequestPtr& req, Outcome outcome, std::uint32_t payload_bytes);

  std::uint64_t finished() const { return finished_; }

  // Sees every terminal outcome as it is recorded.
  std::function<void(const Request&, Outcome)> observer;

 private:
  std::uint64_t finished_ = 0;
  std::vector<Micros> last_arrival_;
};

// Single-threaded middleware process: work runs FIFO at full speed.
class MiddlewareCpu {
 public:
  /// Returns the completion time of `cost` queued behind earlier work.
  Micros run(Micros now, Micros cost);
  Micros busy() const { return busy_; }

 private:
  Micros free_at_ = 0;
  Micros busy_ = 0;
};

// Connections from one middleware instance to every node; requests to a
// node are spread round-robin over its connections.
class ConnectionPool {
 public:
  ConnectionPool(std::size_t nodes, std::size_t per_server, std::size_t pipeline_depth);
  ConnectionQueue& next(NodeId node);

 private:
  std::vector<std::vector<ConnectionQueue>> conns_;
  std::vector<std::size_t> cursor_;
};

enum class TimeoutFrom { kSend, kEnqueue };
TimeoutFrom parse_timeout_from(const std::string& s);

struct CallResult {
  bool timed_out = false;
  Reply reply;
};

/// Sends one Memcached request through `conn`, racing it against `timeout`
/// measured from the moment it is written to the connection or from the
/// moment it was queued. A timed-out call frees its connection slot; its
/// late response is dropped.
void call_with_timeout(SimContext& ctx, ConnectionQueue& conn, TimeoutFrom from, NodeId node,
                       std::uint64_t flow, MemOp op, KeyId key, std::uint32_t size,
                       std::uint64_t digest, Micros timeout, std::function<void(CallResult)> done);

class Strategy {
 public:
  virtual ~Strategy() = default;

  /// Places a key directly in the stores that own it (pre-run warm-up).
  virtual void warm(KeyId key, std::uint32_t size, std::uint64_t digest) = 0;
  /// A client request leaves the client at the current time.
  virtual void submit(const RequestPtr& req) = 0;
  virtual void on_restart(NodeId) {}

  /// Strategy counters for the run summary.
  virtual nlohmann::json stats() const = 0;
  /// Routing state for offline introspection (empty when unsupported).
  virtual nlohmann::json route_state() const { return nullptr; }
  /// Outstanding middleware budget slots; zero after quiescence.
  virtual std::size_t occupied() const = 0;
};

/// Builds the strategy named by `section["kind"]`. Throws ConfigError.
std::unique_ptr<Strategy> make_strategy(const nlohmann::json& section, SimContext& ctx);

}  // namespace cachemw
