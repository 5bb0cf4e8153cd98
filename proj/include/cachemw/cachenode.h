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

// Model of one Memcached-like server: a byte-budget LRU store plus the
// runtime knobs the fault injector turns (liveness, CPU share, link factor).

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

namespace cachemw {

using KeyId = std::uint64_t;
using Micros = std::int64_t;

// Values are tracked as (size, digest); payload bytes are never stored.
class CacheStore {
 public:
  struct Entry {
    KeyId key;
    std::uint64_t size;
    std::uint64_t digest;
  };

  explicit CacheStore(std::uint64_t budget_bytes);

  /// Inserts or replaces `key` as most-recently-used, evicting from the LRU
  /// end until the budget holds. Returns the evicted keys, oldest first.
  /// Throws OversizeError when `size` exceeds the whole budget.
  std::vector<KeyId> set(KeyId key, std::uint64_t size, std::uint64_t digest);

  /// Digest on hit (and the entry becomes most-recently-used).
  std::optional<std::uint64_t> get(KeyId key);
  std::optional<Entry> get_entry(KeyId key);

  bool contains(KeyId key) const { return index_.count(key) != 0; }
  void clear();

  std::uint64_t budget() const { return budget_; }
  std::uint64_t used() const { return used_; }
  std::size_t size() const { return index_.size(); }

  // Keys from most- to least-recently used.
  std::vector<KeyId> lru_order() const;

 private:
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<KeyId, std::list<Entry>::iterator> index_;
};

struct NodeRuntimeState {
  bool up = true;
  double cpu_share = 1.0;    // (0, 1]
  double link_factor = 1.0;  // >= 1
};

/// base / cpu_share + payload_bits / (bandwidth / link_factor), rounded up
/// to whole microseconds. Throws ConnectionRefused when the node is down.
Micros service_time(const NodeRuntimeState& state, Micros base_service_time,
                    std::uint64_t payload_bits, double bandwidth_bps);

class ConnectionRefused : public std::exception {
 public:
  const char* what() const noexcept override { return "connection refused"; }
};

class CacheNode {
 public:
  CacheNode(std::uint32_t id, std::uint64_t memory_budget, Micros base_service_time);

  std::uint32_t id() const { return id_; }
  bool up() const { return state_.up; }
  Micros base_service_time() const { return base_service_time_; }

  // Incremented on every crash; work started under an older incarnation is lost.
  std::uint64_t incarnation() const { return incarnation_; }

  void crash();
  /// Brings a down node back with an empty store; no-op when already up.
  void restart();

  NodeRuntimeState& state() { return state_; }
  const NodeRuntimeState& state() const { return state_; }
  CacheStore& store() { return store_; }
  const CacheStore& store() const { return store_; }

 private:
  std::uint32_t id_;
  Micros base_service_time_;
  NodeRuntimeState state_;
  CacheStore store_;
  std::uint64_t incarnation_ = 0;
};

}  // namespace cachemw
