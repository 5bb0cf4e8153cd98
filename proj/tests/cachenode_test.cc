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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "cachemw/errors.h"

namespace cachemw {
namespace {

// Brute-force LRU: a recency-ordered vector, front = most recent.
class LruOracle {
 public:
  explicit LruOracle(std::uint64_t budget) : budget_(budget) {}

  std::vector<KeyId> set(KeyId key, std::uint64_t size, std::uint64_t digest) {
    erase(key);
    items_.insert(items_.begin(), {key, size, digest});
    std::vector<KeyId> evicted;
    while (total() > budget_) {
      evicted.push_back(items_.back().key);
      items_.pop_back();
    }
    return evicted;
  }

  std::optional<std::uint64_t> get(KeyId key) {
    auto it = std::find_if(items_.begin(), items_.end(),
                           [&](const CacheStore::Entry& e) { return e.key == key; });
    if (it == items_.end()) return std::nullopt;
    auto e = *it;
    items_.erase(it);
    items_.insert(items_.begin(), e);
    return e.digest;
  }

  std::vector<KeyId> order() const {
    std::vector<KeyId> keys;
    for (const auto& e : items_) keys.push_back(e.key);
    return keys;
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& e : items_) t += e.size;
    return t;
  }

 private:
  void erase(KeyId key) {
    items_.erase(std::remove_if(items_.begin(), items_.end(),
                                [&](const CacheStore::Entry& e) { return e.key == key; }),
                 items_.end());
  }

  std::uint64_t budget_;
  std::vector<CacheStore::Entry> items_;
};

TEST(CacheStore, SetThenGetHits) {
  CacheStore store(100);
  store.set(1, 10, 0xabc);
  EXPECT_EQ(store.get(1), 0xabcu);
  EXPECT_EQ(store.get(2), std::nullopt);
}

TEST(CacheStore, EmptyStoreMisses) {
  CacheStore store(100);
  EXPECT_EQ(store.get(7), std::nullopt);
  EXPECT_EQ(store.size(), 0u);
}

TEST(CacheStore, EvictsOldestWhenOverBudget) {
  CacheStore store(100);
  store.set(1, 40, 1);
  store.set(2, 40, 2);
  auto evicted = store.set(3, 40, 3);
  ASSERT_EQ(evicted, std::vector<KeyId>{1});
  EXPECT_EQ(store.get(1), std::nullopt);
  EXPECT_EQ(store.used(), 80u);
}

TEST(CacheStore, GetChangesVictim) {
  CacheStore store(100);
  store.set(1, 40, 1);
  store.set(2, 40, 2);
  store.get(1);
  auto evicted = store.set(3, 40, 3);
  EXPECT_EQ(evicted, std::vector<KeyId>{2});
  EXPECT_TRUE(store.contains(1));
}

TEST(CacheStore, ResetExistingKey) {
  CacheStore store(100);
  store.set(1, 40, 1);
  store.set(1, 70, 2);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.used(), 70u);
  EXPECT_EQ(store.get(1), 2u);
}

TEST(CacheStore, OversizeRejected) {
  CacheStore store(100);
  EXPECT_THROW(store.set(1, 101, 0), OversizeError);
  EXPECT_NO_THROW(store.set(1, 100, 0));
}

TEST(CacheStore, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::uint64_t budget = 500 + rng() % 2000;
    CacheStore store(budget);
    LruOracle oracle(budget);
    for (int op = 0; op < 1000; ++op) {
      KeyId key = rng() % 60;
      if (rng() % 3 == 0) {
        std::uint64_t size = 1 + rng() % 200;
        std::uint64_t digest = rng();
        ASSERT_EQ(store.set(key, size, digest), oracle.set(key, size, digest));
      } else {
        ASSERT_EQ(store.get(key), oracle.get(key));
      }
      ASSERT_LE(store.used(), budget);
      ASSERT_EQ(store.used(), oracle.total());
    }
    ASSERT_EQ(store.lru_order(), oracle.order()) << "seed " << seed;
  }
}

TEST(ServiceTime, Formula) {
  NodeRuntimeState s;
  EXPECT_EQ(service_time(s, 50, 0, 1e9), 50);
  s.cpu_share = 0.1;
  EXPECT_EQ(service_time(s, 50, 0, 1e9), 500);
  NodeRuntimeState t;
  EXPECT_EQ(service_time(t, 0, 1'000'000, 100e6), 10'000);
  t.link_factor = 10;
  EXPECT_EQ(service_time(t, 0, 1'000'000, 1e9), 10'000);
}

TEST(ServiceTime, Monotone) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    NodeRuntimeState a;
    a.cpu_share = 0.05 + 0.95 * (rng() % 1000) / 1000.0;
    a.link_factor = 1 + (rng() % 20);
    Micros base = 1 + rng() % 1000;
    std::uint64_t bits = rng() % 1'000'000;
    NodeRuntimeState more_cpu = a;
    more_cpu.cpu_share = std::min(1.0, a.cpu_share + 0.05);
    NodeRuntimeState slower_link = a;
    slower_link.link_factor = a.link_factor + 1;
    auto t = service_time(a, base, bits, 1e9);
    EXPECT_LE(service_time(more_cpu, base, bits, 1e9), t);
    EXPECT_GE(service_time(slower_link, base, bits, 1e9), t);
    EXPECT_GE(service_time(a, base, bits + 1000, 1e9), t);
  }
}

TEST(CacheNode, DownNodeRefuses) {
  CacheNode node(0, 1000, 50);
  node.crash();
  EXPECT_THROW(service_time(node.state(), 50, 0, 1e9), ConnectionRefused);
}

TEST(CacheNode, RestartLosesData) {
  CacheNode node(0, 1000, 50);
  node.store().set(1, 10, 9);
  node.crash();
  node.restart();
  EXPECT_TRUE(node.up());
  EXPECT_EQ(node.store().get(1), std::nullopt);
}

TEST(CacheNode, RestartOfUpNodeIsNoop) {
  CacheNode node(0, 1000, 50);
  node.store().set(1, 10, 9);
  auto inc = node.incarnation();
  node.restart();
  EXPECT_EQ(node.store().get(1), 9u);
  EXPECT_EQ(node.incarnation(), inc);
}

}  // namespace
}  // namespace cachemw
