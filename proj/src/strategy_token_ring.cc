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

#include "cachemw/strategy_token_ring.h"

#include <map>

#include "cachemw/errors.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

Consistency parse_consistency(const std::string& s) {
  if (s == "DC_ONE") return Consistency::kOne;
  if (s == "DC_QUORUM") return Consistency::kQuorum;
  if (s == "DC_SAFE_QUORUM") return Consistency::kSafeQuorum;
  throw ConfigError("consistency must be DC_ONE, DC_QUORUM or DC_SAFE_QUORUM");
}

std::string to_string(Consistency c) {
  switch (c) {
    case Consistency::kOne: return "DC_ONE";
    case Consistency::kQuorum: return "DC_QUORUM";
    case Consistency::kSafeQuorum: return "DC_SAFE_QUORUM";
  }
  return "?";
}

RingConfig parse_ring_config(const json& s) {
  const std::string where = "strategy";
  check_keys(s, where,
             {"kind", "hash", "consistency", "prefer_local_on_divergence", "timeout_ms",
              "cpu_us_coordinator", "cpu_us_peer"});
  RingConfig c;
  c.hash = parse_hash_function(get_or<std::string>(s, "hash", "fnv1a_64", where));
  c.consistency = parse_consistency(get_or<std::string>(s, "consistency", "DC_QUORUM", where));
  c.prefer_local_on_divergence = get_or(s, "prefer_local_on_divergence", c.prefer_local_on_divergence, where);
  c.timeout = get_or<Micros>(s, "timeout_ms", 500, where) * 1000;
  c.cpu_us_coordinator = get_or<Micros>(s, "cpu_us_coordinator", c.cpu_us_coordinator, where);
  c.cpu_us_peer = get_or<Micros>(s, "cpu_us_peer", c.cpu_us_peer, where);
  if (c.timeout <= 0) throw ConfigError("timeout_ms must be > 0");
  if (c.cpu_us_coordinator < 0 || c.cpu_us_peer < 0) throw ConfigError("cpu costs must be >= 0");
  return c;
}

std::size_t quorum_required(std::size_t eligible_racks) { return eligible_racks / 2 + 1; }

namespace {

bool valid(const Reply& r) { return r.kind == Reply::kHit || r.kind == Reply::kMiss; }

Resolution as_resolution(const Reply& r) {
  if (r.kind == Reply::kHit) return {Resolution::kHit, r.digest};
  return {Resolution::kMiss, 0};
}

}  // namespace

Resolution resolve_get(const std::vector<RackResponse>& responses, std::size_t eligible,
                       Consistency c, bool prefer_local) {
  const std::size_t required = quorum_required(eligible);
  std::map<std::pair<int, std::uint64_t>, std::size_t> tally;
  std::size_t n_valid = 0;
  for (const auto& r : responses) {
    if (!valid(r.reply)) continue;
    ++n_valid;
    auto key = std::make_pair(static_cast<int>(r.reply.kind), r.reply.kind == Reply::kHit ? r.reply.digest : 0);
    if (++tally[key] >= required) return as_resolution(r.reply);
  }
  if (responses.size() < eligible) return {};
  if (n_valid < required || c == Consistency::kSafeQuorum) return {Resolution::kQuorumError, 0};
  if (prefer_local)
    for (const auto& r : responses)
      if (r.local) return valid(r.reply) ? as_resolution(r.reply) : Resolution{Resolution::kQuorumError, 0};
  for (const auto& r : responses)
    if (valid(r.reply)) return as_resolution(r.reply);
  return {Resolution::kQuorumError, 0};
}

Resolution resolve_set(const std::vector<RackResponse>& responses, std::size_t eligible) {
  std::size_t acks = 0;
  for (const auto& r : responses)
    if (r.reply.kind == Reply::kStored) ++acks;
  if (acks >= quorum_required(eligible)) return {Resolution::kStored, 0};
  if (responses.size() < eligible) return {};
  return {Resolution::kQuorumError, 0};
}

struct TokenRingStrategy::Pending {
  RequestPtr req;
  NodeId coord = 0;
  std::uint64_t incarnation = 0;
  RackId local_rack = 0;
  std::size_t eligible = 0;
  std::vector<RackResponse> responses;
  bool resolved = false;
};

TokenRingStrategy::TokenRingStrategy(RingConfig cfg, SimContext& ctx) : cfg_(std::move(cfg)), ctx_(&ctx) {
  const auto& topo = ctx.cluster.topology();
  for (const auto& [rack, entries] : topo.token_map.racks()) rack_ids_.push_back(rack);
  if (cfg_.consistency != Consistency::kOne && rack_ids_.size() < 2)
    throw ConfigError("quorum consistency levels need at least 2 racks");
  std::vector<NodeId> live;
  for (NodeId n = 0; n < ctx.cluster.size(); ++n)
    if (ctx.cluster.up(n)) live.push_back(n);
  if (live.empty()) throw ConfigError("token ring needs at least one live node at start");
  for (std::uint32_t c = 0; c < ctx.workload.clients; ++c) entry_.push_back(live[c % live.size()]);
  key_token_.reserve(ctx.keys.names.size());
  for (const auto& k : ctx.keys.names) key_token_.push_back(hash_key(cfg_.hash, k));
}

NodeId TokenRingStrategy::owner(RackId rack, KeyId key) const {
  return token_owner(ctx_->cluster.topology().token_map, rack, key_token_.at(key));
}

std::vector<RackId> TokenRingStrategy::eligible_racks() const {
  const auto& topo = ctx_->cluster.topology();
  std::vector<RackId> out;
  for (RackId r : rack_ids_)
    for (NodeId n : topo.groups.at(r).nodes)
      if (ctx_->cluster.up(n)) {
        out.push_back(r);
        break;
      }
  return out;
}

void TokenRingStrategy::warm(KeyId key, std::uint32_t size, std::uint64_t digest) {
  for (RackId r : rack_ids_) {
    NodeId n = owner(r, key);
    if (ctx_->cluster.up(n)) ctx_->cluster.node(n).store().set(key, size, digest);
  }
}

void TokenRingStrategy::submit(const RequestPtr& req) {
  const NodeId coord = entry_.at(req->client);
  ctx_->kernel.schedule(ctx_->client_arrival(req->client, req->op == Op::kSet ? req->size : 0), [this, req, coord] {
    if (!ctx_->cluster.up(coord)) {
      ++addressed_down_;
      ctx_->reply_to_client(req, Outcome::kErrorConn, 0);
      return;
    }
    coordinate(req, coord);
  });
}

void TokenRingStrategy::coordinate(const RequestPtr& req, NodeId coord) {
  auto p = std::make_shared<Pending>();
  p->req = req;
  p->coord = coord;
  p->incarnation = ctx_->cluster.node(coord).incarnation();
  p->local_rack = ctx_->cluster.topology().group_of.at(coord);
  if (ctx_->cluster.degraded(coord)) req->touched_degraded = true;
  ctx_->cluster.run_on(coord, cfg_.cpu_us_coordinator, [this, p](bool ok) {
    if (!ok) {
      respond(p, Outcome::kErrorConn);
      return;
    }
    auto racks = eligible_racks();
    const bool set = p->req->op == Op::kSet;
    const bool one = cfg_.consistency == Consistency::kOne;
    p->eligible = one ? 1 : racks.size();
    ctx_->kernel.after(cfg_.timeout, [this, p] { respond(p, Outcome::kErrorTimeout); });
    for (RackId r : racks) {
      const bool local = r == p->local_rack;
      if (one && !local && !set) continue;
      const bool counted = !one || local;
      NodeId n = owner(r, p->req->key);
      if (ctx_->cluster.degraded(n)) p->req->touched_degraded = true;
      if (n != p->coord) ++forwards_;
      if (!counted) ++async_pending_;
      auto wanted = [p, counted] { return !counted || !p->resolved; };
      ctx_->cluster.memcached(
          n, p->coord, set ? MemOp::kSet : MemOp::kGet, p->req->key, p->req->size, p->req->digest,
          n == p->coord ? 0 : cfg_.cpu_us_peer, wanted, [this, p, r, local, counted](Reply reply) {
            if (!counted) {
              --async_pending_;
              return;
            }
            if (p->resolved) return;
            p->responses.push_back({r, reply, local});
            Resolution res;
            if (cfg_.consistency == Consistency::kOne) {
              if (reply.kind == Reply::kRefused) {
                respond(p, Outcome::kErrorConn);
                return;
              }
              res = as_resolution(reply);
              if (reply.kind == Reply::kStored) res = {Resolution::kStored, 0};
            } else if (p->req->op == Op::kSet) {
              res = resolve_set(p->responses, p->eligible);
            } else {
              res = resolve_get(p->responses, p->eligible, cfg_.consistency, cfg_.prefer_local_on_divergence);
            }
            switch (res.kind) {
              case Resolution::kPending: break;
              case Resolution::kHit:
                p->req->reply_digest = res.digest;
                respond(p, Outcome::kDone);
                break;
              case Resolution::kStored: respond(p, Outcome::kDone); break;
              case Resolution::kMiss: respond(p, Outcome::kMiss); break;
              case Resolution::kQuorumError: respond(p, Outcome::kErrorQuorum); break;
            }
          });
    }
  });
}

void TokenRingStrategy::respond(const std::shared_ptr<Pending>& p, Outcome o) {
  if (p->resolved) return;
  p->resolved = true;
  const auto& coord = ctx_->cluster.node(p->coord);
  if (!coord.up() || coord.incarnation() != p->incarnation) {
    ++addressed_down_;
    o = Outcome::kErrorConn;
  }
  ctx_->reply_to_client(p->req, o, 0);
}

json TokenRingStrategy::stats() const {
  return {{"consistency", to_string(cfg_.consistency)},
          {"forwards", forwards_},
          {"addressed_to_down_entry", addressed_down_},
          {"async_pending", async_pending_}};
}

}  // namespace cachemw
