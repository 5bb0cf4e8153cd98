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

#include "cachemw/cachenode.h"

#include <cmath>
#include <string>

#include "cachemw/errors.h"

namespace cachemw {

CacheStore::CacheStore(std::uint64_t budget_bytes) : budget_(budget_bytes) {}

std::vector<KeyId> CacheStore::set(KeyId key, std::uint64_t size,
                                   std::uint64_t digest) {
  if (size > budget_)
    throw OversizeError("value of " + std::to_string(size) +
                        " bytes exceeds budget " + std::to_string(budget_));
  if (auto it = index_.find(key); it != index_.end()) {
    used_ -= it->second->size;
    lru_.erase(it->second);
    index_.erase(it);
  }
  std::vector<KeyId> evicted;
  while (used_ + size > budget_) {
    const Entry& victim = lru_.back();
    evicted.push_back(victim.key);
    used_ -= victim.size;
    index_.erase(victim.key);
    lru_.pop_back();
  }
  lru_.push_front({key, size, digest});
  index_[key] = lru_.begin();
  used_ += size;
  return evicted;
}

std::optional<std::uint64_t> CacheStore::get(KeyId key) {
  auto e = get_entry(key);
  if (!e) return std::nullopt;
  return e->digest;
}

std::optional<CacheStore::Entry> CacheStore::get_entry(KeyId key) {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  lru_.splice(lru_.begin(), lru_, it->second);
  return *it->second;
}

void CacheStore::clear() {
  lru_.clear();
  index_.clear();
  used_ = 0;
}

std::vector<KeyId> CacheStore::lru_order() const {
  std::vector<KeyId> keys;
  keys.reserve(lru_.size());
  for (const auto& e : lru_) keys.push_back(e.key);
  return keys;
}

Micros service_time(const NodeRuntimeState& state, Micros base_service_time,
                    std::uint64_t payload_bits, double bandwidth_bps) {
  if (!state.up) throw ConnectionRefused();
  double us = static_cast<double>(base_service_time) / state.cpu_share;
  if (payload_bits > 0)
    us += static_cast<double>(payload_bits) * 1e6 / (bandwidth_bps / state.link_factor);
  return static_cast<Micros>(std::ceil(us - 1e-9));
}

CacheNode::CacheNode(std::uint32_t id, std::uint64_t memory_budget,
                     Micros base_service_time)
    : id_(id), base_service_time_(base_service_time), store_(memory_budget) {}

void CacheNode::crash() {
  if (!state_.up) return;
  state_.up = false;
  ++incarnation_;
}

void CacheNode::restart() {
  if (state_.up) return;
  state_.up = true;
  store_.clear();
}

}  // namespace cachemw
