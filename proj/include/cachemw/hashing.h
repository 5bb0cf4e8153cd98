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

// Key-to-shard primitives: hash functions, hashtags, and the three
// distributions (ketama, modula, random), plus token-range ownership for the
// peer-to-peer ring.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cachemw {

// 64-bit hash value. 32- and 16-bit functions are zero-extended.
using KeyHash = std::uint64_t;
using ServerId = std::uint32_t;
using NodeId = std::uint32_t;
using RackId = std::uint32_t;

/// FNV-1a, 64-bit (xor then multiply). The "fnv1a_64" name is what
/// scenarios use; plain FNV-1 is not provided.
KeyHash hash_fnv1a_64(std::string_view key);

/// Bob Jenkins' one-at-a-time hash.
KeyHash hash_one_at_a_time(std::string_view key);

/// Reflected CRC-32 (poly 0xEDB88320, init/xorout 0xFFFFFFFF).
KeyHash hash_crc32(std::string_view key);

/// CRC-16/ARC (reflected poly 0xA001, init 0, no xorout).
KeyHash hash_crc16(std::string_view key);

enum class HashFunction { kFnv1a64, kOneAtATime, kCrc32, kCrc16 };

HashFunction parse_hash_function(std::string_view name);
std::string_view to_string(HashFunction fn);
KeyHash hash_key(HashFunction fn, std::string_view key);

// Bit width of the function's output space; ring points live in the same space.
int hash_bits(HashFunction fn);

/// Returns the bytes strictly between the first `open` and the next `close`.
/// Falls back to the whole key when the tag is missing, unterminated or empty.
std::string_view extract_hashtag(std::string_view key, std::string_view open,
                                 std::string_view close);

std::size_t modula_select(KeyHash hash, std::size_t n_live);

std::size_t random_select(std::mt19937_64& rng, std::size_t n_live);

// Consistent-hashing continuum. Points are (hash, server) sorted by hash;
// equal hashes are ordered by server id so the ring is a pure function of
// its inputs.
class HashRing {
 public:
  struct Point {
    KeyHash hash;
    ServerId server;
    friend bool operator==(const Point&, const Point&) = default;
  };

  static constexpr std::size_t kDefaultPointsPerServer = 160;

  HashRing() = default;

  /// Builds the continuum. Point i of server s is the hash of "<name>-<i>"
  /// under `fn`, avalanche-mixed and truncated to the function's width, where
  /// name is `names[s]` when provided, else "server<s>".
  static HashRing build(const std::vector<ServerId>& servers,
                        std::size_t points_per_server,
                        HashFunction fn = HashFunction::kFnv1a64,
                        const std::vector<std::string>& names = {});

  /// Owner of the first point with hash >= `hash`, wrapping past the end.
  ServerId select(KeyHash hash) const;

  bool empty() const { return points_.empty(); }
  const std::vector<Point>& points() const { return points_; }
  std::size_t points_per_server() const { return points_per_server_; }

 private:
  std::vector<Point> points_;
  std::size_t points_per_server_ = 0;
};

// Per-rack token assignment. A node owns the sub-range ending (inclusive) at
// its token; the first node of a rack also owns everything past the last token.
class TokenMap {
 public:
  struct Entry {
    std::uint64_t token;
    NodeId node;
  };

  /// Appends an entry; tokens must be strictly increasing within a rack.
  void add(RackId rack, std::uint64_t token, NodeId node);

  /// Evenly spaced tokens: node i of n gets (i + 1) * floor((2^64 - 1) / n);
  /// the last node gets 2^64 - 1.
  static std::vector<std::uint64_t> even_tokens(std::size_t n);

  NodeId owner(RackId rack, std::uint64_t token) const;

  bool has_rack(RackId rack) const { return racks_.count(rack) != 0; }
  const std::vector<Entry>& entries(RackId rack) const;
  const std::map<RackId, std::vector<Entry>>& racks() const { return racks_; }

 private:
  std::map<RackId, std::vector<Entry>> racks_;
};

NodeId token_owner(const TokenMap& map, RackId rack, std::uint64_t token);

}  // namespace cachemw
