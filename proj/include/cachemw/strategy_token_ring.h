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

// Dynomite-style peer-to-peer layer. The node a client connects to
// coordinates: it forwards to the token owner in its own rack and replicates
// to the owner in every other rack. Rack-level quorum accounting; a crashed
// coordinator is not retried elsewhere.

#include <optional>
#include <string>
#include <vector>

#include "cachemw/hashing.h"
#include "cachemw/strategy.h"

namespace cachemw {

enum class Consistency { kOne, kQuorum, kSafeQuorum };
Consistency parse_consistency(const std::string& s);
std::string to_string(Consistency c);

struct RingConfig {
  HashFunction hash = HashFunction::kFnv1a64;
  Consistency consistency = Consistency::kQuorum;
  bool prefer_local_on_divergence = true;
  Micros timeout = 500'000;
  Micros cpu_us_coordinator = 30;
  Micros cpu_us_peer = 20;
};

RingConfig parse_ring_config(const nlohmann::json& section);

// One rack's answer as seen by the coordinator.
struct RackResponse {
  RackId rack = 0;
  Reply reply;
  bool local = false;
};

struct Resolution {
  enum Kind { kPending, kHit, kMiss, kStored, kQuorumError } kind = kPending;
  std::uint64_t digest = 0;
};

std::size_t quorum_required(std::size_t eligible_racks);

/// Get resolution over responses in arrival order. Refused replies count as
/// received but invalid. Returns kPending until `required` valid replies
/// agree or every eligible rack has answered.
Resolution resolve_get(const std::vector<RackResponse>& responses, std::size_t eligible,
                       Consistency c, bool prefer_local);
/// Set resolution: kStored once `required` acks arrived.
Resolution resolve_set(const std::vector<RackResponse>& responses, std::size_t eligible);

class TokenRingStrategy : public Strategy {
 public:
  TokenRingStrategy(RingConfig cfg, SimContext& ctx);

  void warm(KeyId key, std::uint32_t size, std::uint64_t digest) override;
  void submit(const RequestPtr& req) override;
  nlohmann::json stats() const override;
  std::size_t occupied() const override { return 0; }

  NodeId entry_node(std::uint32_t client) const { return entry_.at(client); }
  NodeId owner(RackId rack, KeyId key) const;
  std::vector<RackId> eligible_racks() const;
  std::uint64_t addressed_to_down() const { return addressed_down_; }
  std::uint64_t async_pending() const { return async_pending_; }

 private:
  struct Pending;
  void coordinate(const RequestPtr& req, NodeId coord);
  void respond(const std::shared_ptr<Pending>& p, Outcome o);

  RingConfig cfg_;
  SimContext* ctx_;
  std::vector<NodeId> entry_;
  std::vector<std::uint64_t> key_token_;
  std::vector<RackId> rack_ids_;
  std::uint64_t addressed_down_ = 0;
  std::uint64_t async_pending_ = 0;
  std::uint64_t forwards_ = 0;
};

}  // namespace cachemw
