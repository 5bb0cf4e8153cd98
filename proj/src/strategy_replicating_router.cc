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

#include "cachemw/strategy_replicating_router.h"

#include <algorithm>

#include "cachemw/errors.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

namespace {

std::string scope_name(SoftTkoScope s) {
  switch (s) {
    case SoftTkoScope::kGlobal: return "global";
    case SoftTkoScope::kPerPool: return "per_pool";
    case SoftTkoScope::kPerSlice: return "per_slice";
  }
  return "?";
}

}  // namespace

RouterConfig parse_router_config(const json& s) {
  const std::string where = "strategy";
  check_keys(s, where,
             {"kind", "hash", "points_per_server", "failures_until_tko", "maximum_soft_tko",
              "soft_tko_scope", "probe_interval_initial_ms", "probe_interval_max_ms",
              "jitter_fraction", "timeout_ms", "timeout_from", "convert_get_errors_to_miss",
              "inflight_budget", "pipeline_depth", "cpu_us_per_request", "cpu_us_per_destination",
              "prefix_routes"});
  RouterConfig c;
  c.hash = parse_hash_function(get_or<std::string>(s, "hash", "crc32", where));
  c.points_per_server = get_or(s, "points_per_server", c.points_per_server, where);
  c.failures_until_tko = get_or(s, "failures_until_tko", c.failures_until_tko, where);
  c.maximum_soft_tko = get_or(s, "maximum_soft_tko", c.maximum_soft_tko, where);
  auto scope = get_or<std::string>(s, "soft_tko_scope", "per_slice", where);
  if (scope == "global") c.soft_tko_scope = SoftTkoScope::kGlobal;
  else if (scope == "per_pool") c.soft_tko_scope = SoftTkoScope::kPerPool;
  else if (scope == "per_slice") c.soft_tko_scope = SoftTkoScope::kPerSlice;
  else throw ConfigError("soft_tko_scope must be global, per_pool or per_slice");
  c.probe_interval_initial = get_or<Micros>(s, "probe_interval_initial_ms", 100, where) * 1000;
  c.probe_interval_max = get_or<Micros>(s, "probe_interval_max_ms", 3000, where) * 1000;
  c.jitter_fraction = get_or(s, "jitter_fraction", c.jitter_fraction, where);
  c.timeout = get_or<Micros>(s, "timeout_ms", 100, where) * 1000;
  c.timeout_from = parse_timeout_from(get_or<std::string>(s, "timeout_from", "enqueue", where));
  c.convert_get_errors_to_miss = get_or(s, "convert_get_errors_to_miss", c.convert_get_errors_to_miss, where);
  c.inflight_budget = get_or(s, "inflight_budget", c.inflight_budget, where);
  c.pipeline_depth = get_or(s, "pipeline_depth", c.pipeline_depth, where);
  c.cpu_us_per_request = get_or<Micros>(s, "cpu_us_per_request", c.cpu_us_per_request, where);
  c.cpu_us_per_destination = get_or<Micros>(s, "cpu_us_per_destination", c.cpu_us_per_destination, where);
  if (s.contains("prefix_routes")) {
    const auto& rules = s.at("prefix_routes");
    if (!rules.is_array()) throw ConfigError("prefix_routes must be a list");
    for (const auto& r : rules) {
      check_keys(r, "strategy.prefix_routes[]", {"prefix", "pools"});
      PrefixRule rule;
      rule.prefix = get_or<std::string>(r, "prefix", "", where);
      rule.pools = get_or<std::vector<std::size_t>>(r, "pools", {}, where);
      if (rule.prefix.empty()) throw ConfigError("prefix route rules need a non-empty prefix");
      if (rule.pools.empty()) throw ConfigError("prefix route '" + rule.prefix + "' has no pools");
      c.prefix_routes.push_back(std::move(rule));
    }
  }
  if (c.failures_until_tko < 1) throw ConfigError("failures_until_tko must be >= 1");
  if (c.probe_interval_initial <= 0 || c.probe_interval_initial > c.probe_interval_max)
    throw ConfigError("probe intervals must satisfy 0 < initial <= max");
  if (!(c.jitter_fraction >= 0 && c.jitter_fraction <= 0.5))
    throw ConfigError("jitter_fraction must be in [0, 0.5]");
  if (c.timeout <= 0) throw ConfigError("timeout_ms must be > 0");
  if (c.inflight_budget < 1 || c.pipeline_depth < 1) throw ConfigError("inflight_budget and pipeline_depth must be >= 1");
  if (c.cpu_us_per_request < 0 || c.cpu_us_per_destination < 0) throw ConfigError("cpu costs must be >= 0");
  return c;
}

json router_config_json(const RouterConfig& c) {
  json rules = json::array();
  for (const auto& r : c.prefix_routes) rules.push_back({{"prefix", r.prefix}, {"pools", r.pools}});
  return {{"kind", "replicating_router"},
          {"hash", std::string(to_string(c.hash))},
          {"points_per_server", c.points_per_server},
          {"failures_until_tko", c.failures_until_tko},
          {"maximum_soft_tko", c.maximum_soft_tko},
          {"soft_tko_scope", scope_name(c.soft_tko_scope)},
          {"probe_interval_initial_ms", c.probe_interval_initial / 1000},
          {"probe_interval_max_ms", c.probe_interval_max / 1000},
          {"jitter_fraction", c.jitter_fraction},
          {"timeout_ms", c.timeout / 1000},
          {"timeout_from", c.timeout_from == TimeoutFrom::kSend ? "send" : "enqueue"},
          {"convert_get_errors_to_miss", c.convert_get_errors_to_miss},
          {"inflight_budget", c.inflight_budget},
          {"pipeline_depth", c.pipeline_depth},
          {"cpu_us_per_request", c.cpu_us_per_request},
          {"cpu_us_per_destination", c.cpu_us_per_destination},
          {"prefix_routes", rules}};
}

std::string to_string(Health h) {
  switch (h) {
    case Health::kActive: return "active";
    case Health::kSoftTko: return "soft_tko";
    case Health::kHardTko: return "hard_tko";
  }
  return "?";
}

Micros probe_base_interval(const RouterConfig& cfg, std::size_t attempt) {
  Micros v = cfg.probe_interval_initial;
  for (std::size_t i = 0; i < attempt && v < cfg.probe_interval_max; ++i) v *= 2;
  return std::min(v, cfg.probe_interval_max);
}

Micros probe_interval(const RouterConfig& cfg, std::size_t attempt, double u) {
  const Micros base = probe_base_interval(cfg, attempt);
  const Micros interval = base + static_cast<Micros>(static_cast<double>(base) * cfg.jitter_fraction * u);
  if (interval < base || static_cast<double>(interval) > 1.5 * static_cast<double>(base))
    throw InternalError("probe interval outside jitter bound");
  return interval;
}

RouterTable::RouterTable(const RouterConfig& cfg, std::vector<std::vector<NodeId>> pools)
    : cfg_(&cfg), pools_(std::move(pools)) {
  if (pools_.empty()) throw ConfigError("router needs at least one pool");
  std::vector<ServerId> slices;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < pools_[0].size(); ++i) {
    slices.push_back(static_cast<ServerId>(i));
    names.push_back("slice" + std::to_string(i));
  }
  ring_ = HashRing::build(slices, cfg.points_per_server, cfg.hash, names);
  for (std::size_t p = 0; p < pools_.size(); ++p) all_pools_.push_back(p);
  for (const auto& r : cfg.prefix_routes)
    for (auto p : r.pools)
      if (p >= pools_.size()) throw ConfigError("prefix route '" + r.prefix + "' names unknown pool");
}

const std::vector<std::size_t>& RouterTable::pools_for(std::string_view key) const {
  const PrefixRule* best = nullptr;
  for (const auto& r : cfg_->prefix_routes)
    if (key.substr(0, r.prefix.size()) == r.prefix && (!best || r.prefix.size() > best->prefix.size()))
      best = &r;
  return best ? best->pools : all_pools_;
}

std::size_t RouterTable::slice_of(std::string_view key) const {
  return ring_.select(hash_key(cfg_->hash, key));
}

std::vector<std::size_t> RouterTable::read_order(std::uint32_t client, std::string_view key) const {
  const auto& pools = pools_for(key);
  const std::size_t primary = hash_fnv1a_64("client" + std::to_string(client)) % pools.size();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < pools.size(); ++i) order.push_back(pools[(primary + i) % pools.size()]);
  return order;
}

HealthTable::HealthTable(const RouterConfig& cfg, const RouterTable& table, std::size_t nodes)
    : cfg_(&cfg), dest_(nodes), pool_of_(nodes, 0), slice_of_(nodes, 0) {
  for (std::size_t p = 0; p < table.pools().size(); ++p)
    for (std::size_t s = 0; s < table.pools()[p].size(); ++s) {
      pool_of_.at(table.pools()[p][s]) = p;
      slice_of_.at(table.pools()[p][s]) = s;
    }
}

std::size_t HealthTable::scope_key(NodeId n) const {
  switch (cfg_->soft_tko_scope) {
    case SoftTkoScope::kGlobal: return 0;
    case SoftTkoScope::kPerPool: return pool_of_[n];
    case SoftTkoScope::kPerSlice: return slice_of_[n];
  }
  return 0;
}

std::size_t HealthTable::soft_tko_in_scope(NodeId n) const {
  const std::size_t key = scope_key(n);
  std::size_t count = 0;
  for (NodeId m = 0; m < dest_.size(); ++m)
    if (dest_[m].status == Health::kSoftTko && scope_key(m) == key) ++count;
  return count;
}

bool HealthTable::update(NodeId n, Event e) {
  auto& d = dest_.at(n);
  bool entered = false;
  switch (e) {
    case Event::kSuccess:
      d.soft_errors = 0;
      if (d.status == Health::kSoftTko) ++d.soft_transitions;
      d.status = Health::kActive;
      break;
    case Event::kTimeout:
      if (d.status != Health::kActive) break;
      ++d.soft_errors;
      if (d.soft_errors >= cfg_->failures_until_tko && soft_tko_in_scope(n) < cfg_->maximum_soft_tko) {
        d.status = Health::kSoftTko;
        d.soft_errors = 0;
        d.probe_attempt = 0;
        ++d.soft_transitions;
        entered = true;
      }
      break;
    case Event::kRefused:
      if (d.status == Health::kHardTko) break;
      entered = d.status == Health::kActive;
      d.status = Health::kHardTko;
      d.soft_errors = 0;
      if (entered) d.probe_attempt = 0;
      break;
  }
  check_invariants();
  return entered;
}

bool HealthTable::probe_result(NodeId n, bool ok) {
  auto& d = dest_.at(n);
  if (d.status == Health::kActive) return true;
  if (!ok) {
    ++d.probe_attempt;
    return false;
  }
  if (d.status == Health::kSoftTko) ++d.soft_transitions;
  d.status = Health::kActive;
  d.soft_errors = 0;
  d.probe_attempt = 0;
  check_invariants();
  return true;
}

void HealthTable::check_invariants() const {
  std::map<std::size_t, std::size_t> counts;
  for (NodeId m = 0; m < dest_.size(); ++m)
    if (dest_[m].status == Health::kSoftTko && ++counts[scope_key(m)] > cfg_->maximum_soft_tko)
      throw InternalError("soft TKO cap exceeded");
}

void HealthTable::set_status(NodeId n, Health h) { dest_.at(n).status = h; }

std::vector<Health> HealthTable::snapshot() const {
  std::vector<Health> out;
  for (const auto& d : dest_) out.push_back(d.status);
  return out;
}

RouteReport admin_route(const RouterTable& table, const HealthTable& health, Op op,
                        std::string_view key, std::uint32_t client) {
  RouteReport r;
  r.op = op;
  const std::size_t slice = table.slice_of(key);
  const auto pools = op == Op::kGet ? table.read_order(client, key) : table.pools_for(key);
  for (auto p : pools) {
    NodeId n = table.destination(p, slice);
    (health.tko(n) ? r.skipped : r.destinations).push_back(n);
  }
  return r;
}

ReplicatingRouterStrategy::Instance::Instance(const RouterConfig& cfg, const RouterTable& table,
                                              SimContext& ctx, std::uint64_t seed)
    : health(cfg, table, ctx.cluster.size()),
      budget(ctx.kernel, cfg.inflight_budget),
      conns(ctx.cluster.size(), ctx.workload.connections_per_server, cfg.pipeline_depth),
      jitter(seed),
      probing(ctx.cluster.size(), false) {}

namespace {
std::vector<std::vector<NodeId>> pools_of(const ClusterTopology& t) {
  std::vector<std::vector<NodeId>> out;
  for (const auto& g : t.groups) out.push_back(g.nodes);
  return out;
}
}  // namespace

ReplicatingRouterStrategy::ReplicatingRouterStrategy(RouterConfig cfg, SimContext& ctx)
    : cfg_(std::move(cfg)), ctx_(&ctx), table_(cfg_, pools_of(ctx.cluster.topology())) {
  for (std::size_t i = 0; i < ctx.cluster.topology().middleware_instances; ++i) {
    auto rng = derive_stream(ctx.seed, "router-jitter-" + std::to_string(i));
    instances_.push_back(std::make_unique<Instance>(cfg_, table_, ctx, rng()));
  }
  key_slice_.reserve(ctx.keys.names.size());
  for (const auto& k : ctx.keys.names) key_slice_.push_back(table_.slice_of(k));
}

void ReplicatingRouterStrategy::warm(KeyId key, std::uint32_t size, std::uint64_t digest) {
  for (auto p : table_.pools_for(ctx_->keys.names[key])) {
    NodeId n = table_.destination(p, key_slice_[key]);
    if (ctx_->cluster.up(n)) ctx_->cluster.node(n).store().set(key, size, digest);
  }
}

void ReplicatingRouterStrategy::submit(const RequestPtr& req) {
  const std::size_t inst = req->client % instances_.size();
  ctx_->kernel.schedule(ctx_->client_arrival(req->client, req->op == Op::kSet ? req->size : 0), [this, inst, req] {
    instances_[inst]->budget.acquire([this, inst, req] {
      const std::size_t dests = req->op == Op::kGet ? 1 : table_.pools_for(ctx_->keys.names[req->key]).size();
      Micros cost = cfg_.cpu_us_per_request + cfg_.cpu_us_per_destination * static_cast<Micros>(dests);
      Micros at = instances_[inst]->cpu.run(ctx_->kernel.now(), cost);
      ctx_->kernel.schedule(at, [this, inst, req] { start(inst, req); });
    });
  });
}

struct ReplicatingRouterStrategy::GetState {
  RequestPtr req;
  std::vector<std::size_t> order;
  std::size_t next = 0;
  bool miss = false, timeout = false, refused = false;
};

struct ReplicatingRouterStrategy::SetState {
  RequestPtr req;
  std::size_t required = 0, sent = 0, acks = 0, fails = 0, skipped = 0;
  bool timeout = false, resolved = false;
};

void ReplicatingRouterStrategy::start(std::size_t inst, const RequestPtr& req) {
  if (req->op == Op::kSet) {
    do_set(inst, req);
    return;
  }
  auto st = std::make_shared<GetState>();
  st->req = req;
  st->order = table_.read_order(req->client, ctx_->keys.names[req->key]);
  try_get(inst, st);
}

void ReplicatingRouterStrategy::try_get(std::size_t inst, const std::shared_ptr<GetState>& st) {
  auto& in = *instances_[inst];
  const auto& req = st->req;
  while (st->next < st->order.size()) {
    NodeId n = table_.destination(st->order[st->next++], key_slice_[req->key]);
    if (in.health.tko(n)) continue;
    if (ctx_->cluster.degraded(n)) req->touched_degraded = true;
    call_with_timeout(*ctx_, in.conns.next(n), cfg_.timeout_from, n, inst, MemOp::kGet, req->key, 0, 0,
                      cfg_.timeout, [this, inst, st, n](CallResult r) {
                        if (r.timed_out) {
                          note(inst, n, HealthTable::Event::kTimeout);
                          st->timeout = true;
                        } else if (r.reply.kind == Reply::kRefused) {
                          note(inst, n, HealthTable::Event::kRefused);
                          st->refused = true;
                        } else {
                          note(inst, n, HealthTable::Event::kSuccess);
                          if (r.reply.kind == Reply::kHit) {
                            st->req->reply_digest = r.reply.digest;
                            finish(inst, st->req, Outcome::kDone);
                            return;
                          }
                          st->miss = true;
                        }
                        try_get(inst, st);
                      });
    return;
  }
  Outcome o = Outcome::kMiss;
  if (!st->miss && !cfg_.convert_get_errors_to_miss)
    o = st->timeout ? Outcome::kErrorTimeout : Outcome::kErrorConn;
  finish(inst, req, o);
}

void ReplicatingRouterStrategy::do_set(std::size_t inst, const RequestPtr& req) {
  auto& in = *instances_[inst];
  auto st = std::make_shared<SetState>();
  st->req = req;
  const auto& pools = table_.pools_for(ctx_->keys.names[req->key]);
  st->required = pools.size() / 2 + 1;
  auto settle = [this, inst, st] {
    if (st->resolved) return;
    if (st->acks >= st->required) {
      st->resolved = true;
      finish(inst, st->req, Outcome::kDone);
    } else if (st->skipped == 0 && st->acks + st->fails == st->sent) {
      st->resolved = true;
      finish(inst, st->req, st->timeout ? Outcome::kErrorTimeout : Outcome::kErrorConn);
    }
  };
  ctx_->kernel.after(cfg_.timeout, [this, inst, st] {
    if (st->resolved) return;
    st->resolved = true;
    finish(inst, st->req, Outcome::kErrorTimeout);
  });
  std::vector<NodeId> targets;
  for (auto p : pools) {
    NodeId n = table_.destination(p, key_slice_[req->key]);
    if (in.health.tko(n)) {
      ++st->skipped;
      continue;
    }
    if (ctx_->cluster.degraded(n)) req->touched_degraded = true;
    targets.push_back(n);
  }
  st->sent = targets.size();
  for (NodeId n : targets) {
    call_with_timeout(*ctx_, in.conns.next(n), cfg_.timeout_from, n, inst, MemOp::kSet, req->key, req->size,
                      req->digest, cfg_.timeout, [this, inst, st, n, settle](CallResult r) {
                        if (r.timed_out) {
                          note(inst, n, HealthTable::Event::kTimeout);
                          st->timeout = true;
                          ++st->fails;
                        } else if (r.reply.kind == Reply::kRefused) {
                          note(inst, n, HealthTable::Event::kRefused);
                          ++st->fails;
                        } else {
                          note(inst, n, HealthTable::Event::kSuccess);
                          ++st->acks;
                        }
                        settle();
                      });
  }
}

void ReplicatingRouterStrategy::finish(std::size_t inst, const RequestPtr& req, Outcome o) {
  instances_[inst]->budget.release();
  ctx_->reply_to_client(req, o, 0);
}

void ReplicatingRouterStrategy::note(std::size_t inst, NodeId n, HealthTable::Event e) {
  auto& in = *instances_[inst];
  if (in.health.update(n, e) && !in.probing[n]) {
    in.probing[n] = true;
    schedule_probe(inst, n);
  }
}

void ReplicatingRouterStrategy::schedule_probe(std::size_t inst, NodeId n) {
  auto& in = *instances_[inst];
  const double u = static_cast<double>(in.jitter() >> 11) * 0x1.0p-53;
  const Micros interval = probe_interval(cfg_, in.health.probe_attempt(n), u);
  ctx_->kernel.after(interval, [this, inst, n] {
    ++probes_;
    auto guard = std::make_shared<CallGuard>();
    auto done = [this, inst, n](bool ok) {
      auto& in = *instances_[inst];
      if (in.health.probe_result(n, ok)) in.probing[n] = false;
      else schedule_probe(inst, n);
    };
    ctx_->kernel.after(cfg_.timeout, [guard, done] {
      if (guard->claim()) done(false);
    });
    ctx_->cluster.memcached(
        n, inst, MemOp::kProbe, 0, 0, 0, 0, [guard] { return !guard->done(); },
        [guard, done](Reply r) {
          if (guard->claim()) done(r.kind != Reply::kRefused);
        });
  });
}

RouteReport ReplicatingRouterStrategy::route(std::size_t instance, Op op, std::string_view key,
                                             std::uint32_t client) const {
  return admin_route(table_, instances_.at(instance)->health, op, key, client);
}

json ReplicatingRouterStrategy::stats() const {
  json j;
  json transitions = json::array(), status = json::array(), cpu = json::array();
  for (const auto& in : instances_) {
    std::vector<std::size_t> t;
    std::vector<std::string> s;
    for (NodeId n = 0; n < ctx_->cluster.size(); ++n) {
      t.push_back(in->health.transitions(n));
      s.push_back(to_string(in->health.status(n)));
    }
    transitions.push_back(t);
    status.push_back(s);
    cpu.push_back(in->cpu.busy());
  }
  j["soft_tko_transitions"] = transitions;
  j["final_status"] = status;
  j["probes"] = probes_;
  j["middleware_cpu_busy_us"] = cpu;
  return j;
}

json ReplicatingRouterStrategy::route_state() const {
  json health = json::array();
  for (auto h : instances_[0]->health.snapshot()) health.push_back(to_string(h));
  return {{"strategy", router_config_json(cfg_)}, {"pools", table_.pools()}, {"health", health}};
}

std::size_t ReplicatingRouterStrategy::occupied() const {
  std::size_t n = 0;
  for (const auto& in : instances_) n += in->budget.occupied();
  return n;
}

}  // namespace cachemw
