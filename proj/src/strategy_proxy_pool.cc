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

#include "cachemw/strategy_proxy_pool.h"

#include <algorithm>

#include "cachemw/errors.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

ProxyConfig parse_proxy_config(const json& s) {
  const std::string where = "strategy";
  check_keys(s, where,
             {"kind", "hash", "distribution", "hashtag", "points_per_server", "auto_eject",
              "server_failure_limit", "server_retry_timeout_ms", "timeout_ms", "timeout_from",
              "inflight_budget", "pipeline_depth", "cpu_us_per_request"});
  ProxyConfig c;
  c.hash = parse_hash_function(get_or<std::string>(s, "hash", "fnv1a_64", where));
  auto dist = get_or<std::string>(s, "distribution", "ketama", where);
  if (dist == "ketama") c.distribution = Distribution::kKetama;
  else if (dist == "modula") c.distribution = Distribution::kModula;
  else if (dist == "random") c.distribution = Distribution::kRandom;
  else throw ConfigError("distribution must be ketama, modula or random");
  if (s.contains("hashtag") && !s.at("hashtag").is_null()) {
    auto tag = get_or<std::string>(s, "hashtag", "", where);
    if (tag.size() != 2) throw ConfigError("hashtag must be a two-character delimiter pair such as \"{}\"");
    c.hashtag = std::make_pair(tag.substr(0, 1), tag.substr(1, 1));
  }
  c.points_per_server = get_or(s, "points_per_server", c.points_per_server, where);
  c.auto_eject = get_or(s, "auto_eject", c.auto_eject, where);
  c.server_failure_limit = get_or(s, "server_failure_limit", c.server_failure_limit, where);
  c.server_retry_timeout = get_or<Micros>(s, "server_retry_timeout_ms", 30'000, where) * 1000;
  c.timeout = get_or<Micros>(s, "timeout_ms", 400, where) * 1000;
  c.timeout_from = parse_timeout_from(get_or<std::string>(s, "timeout_from", "send", where));
  c.inflight_budget = get_or(s, "inflight_budget", c.inflight_budget, where);
  c.pipeline_depth = get_or(s, "pipeline_depth", c.pipeline_depth, where);
  c.cpu_us_per_request = get_or<Micros>(s, "cpu_us_per_request", c.cpu_us_per_request, where);
  if (c.server_failure_limit < 1) throw ConfigError("server_failure_limit must be >= 1");
  if (c.server_retry_timeout <= 0 || c.timeout <= 0) throw ConfigError("timeouts must be > 0");
  if (c.points_per_server < 1) throw ConfigError("points_per_server must be >= 1");
  if (c.inflight_budget < 1 || c.pipeline_depth < 1) throw ConfigError("inflight_budget and pipeline_depth must be >= 1");
  if (c.cpu_us_per_request < 0) throw ConfigError("cpu_us_per_request must be >= 0");
  return c;
}

ProxyRouting::ProxyRouting(const ProxyConfig& cfg, std::vector<std::string> server_names,
                           std::uint64_t seed)
    : cfg_(&cfg), names_(std::move(server_names)), state_(names_.size()), rng_(seed) {
  rebuild();
}

void ProxyRouting::rebuild() {
  live_.clear();
  for (ServerId s = 0; s < state_.size(); ++s)
    if (!state_[s].ejected) live_.push_back(s);
  if (cfg_->distribution == Distribution::kKetama)
    ring_ = live_.empty() ? HashRing{} : HashRing::build(live_, cfg_->points_per_server, cfg_->hash, names_);
}

KeyHash ProxyRouting::hash(std::string_view key) const {
  if (cfg_->hashtag) key = extract_hashtag(key, cfg_->hashtag->first, cfg_->hashtag->second);
  return hash_key(cfg_->hash, key);
}

ServerId ProxyRouting::route(KeyHash h) {
  if (live_.empty()) throw NoLiveServersError();
  switch (cfg_->distribution) {
    case Distribution::kKetama: return ring_.select(h);
    case Distribution::kModula: return live_[modula_select(h, live_.size())];
    case Distribution::kRandom: return live_[random_select(rng_, live_.size())];
  }
  return live_.front();
}

bool ProxyRouting::on_failure(ServerId s) {
  auto& st = state_.at(s);
  if (st.ejected) return false;
  ++st.failures;
  if (!cfg_->auto_eject || st.failures < cfg_->server_failure_limit) return false;
  st.ejected = true;
  st.failures = 0;
  rebuild();
  return true;
}

void ProxyRouting::on_success(ServerId s) { state_.at(s).failures = 0; }

void ProxyRouting::readd(ServerId s) {
  auto& st = state_.at(s);
  if (!st.ejected) return;
  st.ejected = false;
  st.failures = 0;
  rebuild();
}

ProxyPoolStrategy::Instance::Instance(const ProxyConfig& cfg, SimContext& ctx,
                                      std::vector<std::string> names, std::uint64_t seed)
    : routing(cfg, std::move(names), seed),
      budget(ctx.kernel, cfg.inflight_budget),
      conns(ctx.cluster.size(), ctx.workload.connections_per_server, cfg.pipeline_depth),
      probing(ctx.cluster.size(), false) {}

ProxyPoolStrategy::ProxyPoolStrategy(ProxyConfig cfg, SimContext& ctx) : cfg_(std::move(cfg)), ctx_(&ctx) {
  const auto& topo = ctx.cluster.topology();
  std::vector<std::string> names;
  for (const auto& n : topo.nodes) names.push_back(n.name);
  for (std::size_t i = 0; i < topo.middleware_instances; ++i) {
    auto rng = derive_stream(ctx.seed, "proxy-random-" + std::to_string(i));
    instances_.push_back(std::make_unique<Instance>(cfg_, ctx, names, rng()));
  }
  key_hash_.reserve(ctx.keys.names.size());
  for (const auto& k : ctx.keys.names) key_hash_.push_back(instances_[0]->routing.hash(k));
}

void ProxyPoolStrategy::warm(KeyId key, std::uint32_t size, std::uint64_t digest) {
  ServerId s = instances_[0]->routing.route(key_hash_[key]);
  if (ctx_->cluster.up(s)) ctx_->cluster.node(s).store().set(key, size, digest);
}

void ProxyPoolStrategy::submit(const RequestPtr& req) {
  const std::size_t inst = req->client % instances_.size();
  auto& k = ctx_->kernel;
  k.schedule(ctx_->client_arrival(req->client, req->op == Op::kSet ? req->size : 0), [this, inst, req] {
    instances_[inst]->budget.acquire([this, inst, req] {
      auto& in = *instances_[inst];
      Micros done_at = in.cpu.run(ctx_->kernel.now(), cfg_.cpu_us_per_request);
      ctx_->kernel.schedule(done_at, [this, inst, req] { process(inst, req); });
    });
  });
}

void ProxyPoolStrategy::process(std::size_t inst, const RequestPtr& req) {
  auto& in = *instances_[inst];
  ServerId s = 0;
  try {
    s = in.routing.route(key_hash_[req->key]);
  } catch (const NoLiveServersError&) {
    in.budget.release();
    ctx_->reply_to_client(req, Outcome::kErrorConn, 0);
    return;
  }
  if (ctx_->cluster.degraded(s)) req->touched_degraded = true;
  const bool get = req->op == Op::kGet;
  call_with_timeout(*ctx_, in.conns.next(s), cfg_.timeout_from, s, inst, get ? MemOp::kGet : MemOp::kSet,
                    req->key, req->size, req->digest, cfg_.timeout,
                    [this, inst, s, req, get](CallResult r) {
                      auto& in = *instances_[inst];
                      const bool refused = !r.timed_out && r.reply.kind == Reply::kRefused;
                      if (r.timed_out || refused) {
                        if (in.routing.on_failure(s)) eject(inst, s);
                      } else {
                        in.routing.on_success(s);
                      }
                      Outcome o;
                      if (r.timed_out) o = get ? Outcome::kMiss : Outcome::kErrorTimeout;
                      else if (refused) o = Outcome::kErrorConn;
                      else if (get) o = r.reply.kind == Reply::kHit ? Outcome::kDone : Outcome::kMiss;
                      else o = Outcome::kDone;
                      if (o == Outcome::kDone && get) req->reply_digest = r.reply.digest;
                      in.budget.release();
                      ctx_->reply_to_client(req, o, 0);
                    });
}

void ProxyPoolStrategy::eject(std::size_t inst, ServerId s) {
  ++ejections_;
  auto& in = *instances_[inst];
  if (in.probing[s]) return;
  in.probing[s] = true;
  ctx_->kernel.after(cfg_.server_retry_timeout, [this, inst, s] { probe(inst, s); });
}

void ProxyPoolStrategy::probe(std::size_t inst, ServerId s) {
  auto guard = std::make_shared<CallGuard>();
  auto finish = [this, inst, s](bool ok) {
    auto& in = *instances_[inst];
    if (ok) {
      in.probing[s] = false;
      in.routing.readd(s);
      ++readds_;
    } else {
      ctx_->kernel.after(cfg_.server_retry_timeout, [this, inst, s] { probe(inst, s); });
    }
  };
  ctx_->kernel.after(cfg_.timeout, [guard, finish] {
    if (guard->claim()) finish(false);
  });
  ctx_->cluster.memcached(
      s, inst, MemOp::kProbe, 0, 0, 0, 0, [guard] { return !guard->done(); },
      [guard, finish](Reply r) {
        if (guard->claim()) finish(r.kind != Reply::kRefused);
      });
}

json ProxyPoolStrategy::stats() const {
  json j;
  j["ejections"] = ejections_;
  j["readds"] = readds_;
  json cpu = json::array();
  for (const auto& in : instances_) cpu.push_back(in->cpu.busy());
  j["middleware_cpu_busy_us"] = cpu;
  return j;
}

std::size_t ProxyPoolStrategy::occupied() const {
  std::size_t n = 0;
  for (const auto& in : instances_) n += in->budget.occupied();
  return n;
}

}  // namespace cachemw
