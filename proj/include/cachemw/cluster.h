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

// Runtime model of the cache tier: every node has a FIFO CPU; responses
// leave over the egress link of the node's host, shared by every node on
// it. Links serve flows round-robin, one message per turn. Paths between middleware endpoints and clients are not
// shaped: they cost a propagation delay plus serialization only.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "cachemw/cachenode.h"
#include "cachemw/simkernel.h"
#include "cachemw/topology.h"

namespace cachemw {

struct NetworkParams {
  Micros propagation_us = 50;          // one way, any hop
  std::uint32_t header_bytes = 48;     // per message
  double unshaped_bandwidth_bps = 10e9;
};

enum class MemOp { kGet, kSet, kProbe };

struct Reply {
  enum Kind { kHit, kMiss, kStored, kRefused } kind = kMiss;
  std::uint64_t digest = 0;
};

// Node activity accumulated per one-second window.
struct NodeUsage {
  std::vector<double> cpu_work_us;  // busy time weighted by cpu share
  std::vector<double> net_bits;
};

class Cluster {
 public:
  Cluster(Kernel& kernel, const ClusterTopology& topology, NetworkParams net,
          std::size_t windows);

  Kernel& kernel() { return *kernel_; }
  const ClusterTopology& topology() const { return *topology_; }
  const NetworkParams& net() const { return net_; }
  std::size_t size() const { return nodes_.size(); }

  CacheNode& node(NodeId id) { return nodes_.at(id).node; }
  const CacheNode& node(NodeId id) const { return nodes_.at(id).node; }
  bool up(NodeId id) const { return nodes_.at(id).node.up(); }
  // Overloaded or throttled right now.
  bool degraded(NodeId id) const;

  /// Queues `work` (at full speed) on the node's CPU. `done(true)` fires at
  /// completion; `done(false)` if the node is down at submission or crashed
  /// before the work finished.
  void run_on(NodeId id, Micros work, std::function<void(bool)> done);

  /// Sends `bits` over the egress link of the node's host as part of `flow`. `wanted`
  /// is checked when the message reaches the head of the link; unwanted
  /// messages are dropped without using bandwidth.
  void transmit(NodeId id, std::uint64_t flow, std::uint64_t bits,
                std::function<bool()> wanted, Action delivered);

  /// Propagation plus serialization on an unshaped path.
  Micros hop(std::uint64_t payload_bytes) const;

  /// One Memcached request from a middleware endpoint: request hop, CPU
  /// (`extra_work` plus the node's service time), store operation, response
  /// over the node link, propagation back. Refused replies come back after
  /// one round trip.
  void memcached(NodeId id, std::uint64_t flow, MemOp op, KeyId key, std::uint32_t size,
                 std::uint64_t digest, Micros extra_work, std::function<bool()> wanted,
                 std::function<void(Reply)> reply);

  // Fault hooks.
  void crash(NodeId id);
  void restart(NodeId id);
  void set_cpu_share(NodeId id, double share);
  /// Divides the link's bandwidth; every node on the link sees the factor.
  void set_link_factor(LinkId link, double factor);

  const NodeUsage& usage(NodeId id) const { return nodes_.at(id).usage; }
  // Integral of the hog share (1 - cpu_share) over each window, in seconds.
  std::vector<double> hog_seconds(NodeId id) const;
  std::size_t windows() const { return windows_; }

 private:
  struct Message {
    NodeId from;
    std::uint64_t bits;
    std::function<bool()> wanted;
    Action delivered;
  };
  struct Link {
    double bandwidth_bps = 0;
    double factor = 1.0;
    bool busy = false;
    std::map<std::uint64_t, std::deque<Message>> flows;
    std::uint64_t cursor = 0;  // next flow id to serve
  };
  struct NodeRt {
    CacheNode node;
    Micros cpu_free_at = 0;
    NodeUsage usage;
    std::vector<std::pair<Micros, double>> share_changes;
  };

  void start_next(LinkId id);
  void accrue(std::vector<double>& series, Micros from, Micros to, double amount);

  Kernel* kernel_;
  const ClusterTopology* topology_;
  NetworkParams net_;
  std::size_t windows_;
  std::vector<NodeRt> nodes_;
  std::vector<Link> links_;
};

}  // namespace cachemw
