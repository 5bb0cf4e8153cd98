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

#include "cachemw/hashing.h"

#include <algorithm>
#include <array>
#include <limits>

#include "cachemw/errors.h"

namespace cachemw {

namespace {

constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr std::array<std::uint16_t, 256> make_crc16_table() {
  std::array<std::uint16_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint16_t c = static_cast<std::uint16_t>(i);
    for (int k = 0; k < 8; ++k)
      c = (c & 1) ? static_cast<std::uint16_t>(0xA001u ^ (c >> 1))
                  : static_cast<std::uint16_t>(c >> 1);
    table[i] = c;
  }
  return table;
}

constexpr auto kCrc32Table = make_crc32_table();
constexpr auto kCrc16Table = make_crc16_table();

// murmur3 fmix64; spreads near-identical point labels across the continuum.
std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdull;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ull;
  k ^= k >> 33;
  return k;
}

}  // namespace

KeyHash hash_fnv1a_64(std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

KeyHash hash_one_at_a_time(std::string_view key) {
  std::uint32_t h = 0;
  for (unsigned char c : key) {
    h += c;
    h += h << 10;
    h ^= h >> 6;
  }
  h += h << 3;
  h ^= h >> 11;
  h += h << 15;
  return h;
}

KeyHash hash_crc32(std::string_view key) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char c : key) crc = kCrc32Table[(crc ^ c) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

KeyHash hash_crc16(std::string_view key) {
  std::uint16_t crc = 0;
  for (unsigned char c : key)
    crc = static_cast<std::uint16_t>(kCrc16Table[(crc ^ c) & 0xFF] ^ (crc >> 8));
  return crc;
}

HashFunction parse_hash_function(std::string_view name) {
  if (name == "fnv1a_64") return HashFunction::kFnv1a64;
  if (name == "one_at_a_time") return HashFunction::kOneAtATime;
  if (name == "crc32") return HashFunction::kCrc32;
  if (name == "crc16") return HashFunction::kCrc16;
  throw ConfigError("unknown hash function '" + std::string(name) + "'");
}

std::string_view to_string(HashFunction fn) {
  switch (fn) {
    case HashFunction::kFnv1a64: return "fnv1a_64";
    case HashFunction::kOneAtATime: return "one_at_a_time";
    case HashFunction::kCrc32: return "crc32";
    case HashFunction::kCrc16: return "crc16";
  }
  return "?";
}

KeyHash hash_key(HashFunction fn, std::string_view key) {
  switch (fn) {
    case HashFunction::kFnv1a64: return hash_fnv1a_64(key);
    case HashFunction::kOneAtATime: return hash_one_at_a_time(key);
    case HashFunction::kCrc32: return hash_crc32(key);
    case HashFunction::kCrc16: return hash_crc16(key);
  }
  return 0;
}

int hash_bits(HashFunction fn) {
  switch (fn) {
    case HashFunction::kFnv1a64: return 64;
    case HashFunction::kCrc16: return 16;
    default: return 32;
  }
}

std::string_view extract_hashtag(std::string_view key, std::string_view open,
                                 std::string_view close) {
  if (open.empty() || close.empty()) return key;
  auto begin = key.find(open);
  if (begin == std::string_view::npos) return key;
  begin += open.size();
  auto end = key.find(close, begin);
  if (end == std::string_view::npos || end == begin) return key;
  return key.substr(begin, end - begin);
}

std::size_t modula_select(KeyHash hash, std::size_t n_live) {
  if (n_live == 0) throw NoLiveServersError();
  return static_cast<std::size_t>(hash % n_live);
}

std::size_t random_select(std::mt19937_64& rng, std::size_t n_live) {
  if (n_live == 0) throw NoLiveServersError();
  std::uniform_int_distribution<std::size_t> dist(0, n_live - 1);
  return dist(rng);
}

HashRing HashRing::build(const std::vector<ServerId>& servers,
                         std::size_t points_per_server, HashFunction fn,
                         const std::vector<std::string>& names) {
  HashRing ring;
  ring.points_per_server_ = points_per_server;
  ring.points_.reserve(servers.size() * points_per_server);
  const int bits = hash_bits(fn);
  for (ServerId s : servers) {
    std::string base =
        s < names.size() ? names[s] : "server" + std::to_string(s);
    for (std::size_t i = 0; i < points_per_server; ++i) {
      std::string label = base + "-" + std::to_string(i);
      KeyHash h = fmix64(hash_key(fn, label));
      if (bits < 64) h >>= 64 - bits;
      ring.points_.push_back({h, s});
    }
  }
  std::sort(ring.points_.begin(), ring.points_.end(),
            [](const Point& a, const Point& b) {
              return a.hash != b.hash ? a.hash < b.hash : a.server < b.server;
            });
  return ring;
}

ServerId HashRing::select(KeyHash hash) const {
  if (points_.empty()) throw NoLiveServersError();
  auto it = std::lower_bound(
      points_.begin(), points_.end(), hash,
      [](const Point& p, KeyHash h) { return p.hash < h; });
  if (it == points_.end()) it = points_.begin();
  return it->server;
}

void TokenMap::add(RackId rack, std::uint64_t token, NodeId node) {
  auto& entries = racks_[rack];
  if (!entries.empty() && entries.back().token >= token)
    throw TopologyError("tokens must be strictly increasing within rack " +
                        std::to_string(rack));
  entries.push_back({token, node});
}

std::vector<std::uint64_t> TokenMap::even_tokens(std::size_t n) {
  std::vector<std::uint64_t> tokens;
  if (n == 0) return tokens;
  const std::uint64_t step = std::numeric_limits<std::uint64_t>::max() / n;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(step * (i + 1));
  tokens.back() = std::numeric_limits<std::uint64_t>::max();
  return tokens;
}

const std::vector<TokenMap::Entry>& TokenMap::entries(RackId rack) const {
  auto it = racks_.find(rack);
  if (it == racks_.end())
    throw TopologyError("unknown rack " + std::to_string(rack));
  return it->second;
}

NodeId TokenMap::owner(RackId rack, std::uint64_t token) const {
  const auto& list = entries(rack);
  if (list.empty()) throw TopologyError("rack " + std::to_string(rack) + " has no tokens");
  auto it = std::lower_bound(
      list.begin(), list.end(), token,
      [](const Entry& e, std::uint64_t t) { return e.token < t; });
  if (it == list.end()) it = list.begin();
  return it->node;
}

NodeId token_owner(const TokenMap& map, RackId rack, std::uint64_t token) {
  return map.owner(rack, token);
}

}  // namespace cachemw
