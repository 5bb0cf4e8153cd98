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

#include "cachemw/cluster.h"

#include <algorithm>
#include <cmath>

namespace cachemw {

namespace {
constexpr Micros kWindow = 1'000'000;
}

Cluster::Cluster(Kernel& kernel, const ClusterTopology& topology, NetworkParams net,
                 std::size_t windows)
    : kernel_(&kernel), topology_(&topology), net_(net), windows_(std::max<std::size_t>(windows, 1)) {
  links_.resize(topology.links.size());
  for (std::size_t l = 0; l < links_.size(); ++l) links_[l].bandwidth_bps = topology.links[l].bandwidth_bps;
  nodes_.reserve(topology.nodes.size());
  for (const auto& spec : topology.nodes) {
    NodeRt rt{CacheNode(spec.id, spec.memory_budget, spec.base_service_time), 0, {}, {}};
    rt.usage.cpu_work_us.assign(windows_, 0.0);
    rt.usage.net_bits.assign(windows_, 0.0);
    nodes_.push_back(std::move(rt));
  }
}

bool Cluster::degraded(NodeId id) const {
  const auto& s = nodes_.at(id).node.state();
  return s.cpu_share < 1.0 || s.link_factor > 1.0;
}

void Cluster::accrue(std::vector<double>& series, Micros from, Micros to, double amount) {
  auto window_of = [&](Micros t) {
    if (t < 0) return std::size_t{0};
    return std::min<std::size_t>(static_cast<std::size_t>(t / kWindow), windows_ - 1);
  };
  if (to <= from) {
    series[window_of(from)] += amount;
    return;
  }
  const double rate = amount / static_cast<double>(to - from);
  Micros t = from;
  while (t < to) {
    std::size_t w = window_of(t);
    Micros end = w + 1 == windows_ ? to : std::min<Micros>(to, static_cast<Micros>(w + 1) * kWindow);
    if (end <= t) end = to;
    series[w] += rate * static_cast<double>(end - t);
    t = end;
  }
}

void Cluster::run_on(NodeId id, Micros work, std::function<void(bool)> done) {
  auto& rt = nodes_.at(id);
  if (!rt.node.up()) {
    kernel_->after(0, [done = std::move(done)] { done(false); });
    return;
  }
  const double share = rt.node.state().cpu_share;
  const Micros start = std::max(kernel_->now(), rt.cpu_free_at);
  const Micros finish = start + ceil_micros(static_cast<double>(work) / share);
  rt.cpu_free_at = finish;
  accrue(rt.usage.cpu_work_us, start, finish, static_cast<double>(work));
  const auto incarnation = rt.node.incarnation();
  kernel_->schedule(finish, [this, id, incarnation, done = std::move(done)] {
    const auto& n = nodes_[id].node;
    done(n.up() && n.incarnation() == incarnation);
  });
}

void Cluster::transmit(NodeId id, std::uint64_t flow, std::uint64_t bits,
                       std::function<bool()> wanted, Action delivered) {
  const LinkId l = topology_->nodes.at(id).link;
  auto& link = links_.at(l);
  link.flows[flow].push_back({id, bits, std::move(wanted), std::move(delivered)});
  if (!link.busy) start_next(l);
}

void Cluster::start_next(LinkId id) {
  auto& link = links_[id];
  while (!link.flows.empty()) {
    auto it = link.flows.lower_bound(link.cursor);
    if (it == link.flows.end()) it = link.flows.begin();
    Message msg = std::move(it->second.front());
    it->second.pop_front();
    link.cursor = it->first + 1;
    if (it->second.empty()) link.flows.erase(it);
    if (msg.wanted && !msg.wanted()) continue;

    const double bw = link.bandwidth_bps / link.factor;
    const Micros start = kernel_->now();
    const Micros finish = start + ceil_micros(static_cast<double>(msg.bits) * 1e6 / bw);
    accrue(nodes_[msg.from].usage.net_bits, start, finish, static_cast<double>(msg.bits));
    link.busy = true;
    kernel_->schedule(finish, [this, id, delivered = std::move(msg.delivered)] {
      links_[id].busy = false;
      start_next(id);
      delivered();
    });
    return;
  }
}

Micros Cluster::hop(std::uint64_t payload_bytes) const {
  const double bits = static_cast<double>(payload_bytes + net_.header_bytes) * 8.0;
  return net_.propagation_us + ceil_micros(bits * 1e6 / net_.unshaped_bandwidth_bps);
}

void Cluster::memcached(NodeId id, std::uint64_t flow, MemOp op, KeyId key, std::uint32_t size,
                        std::uint64_t digest, Micros extra_work, std::function<bool()> wanted,
                        std::function<void(Reply)> reply) {
  const Micros prop = net_.propagation_us;
  kernel_->after(hop(op == MemOp::kSet ? size : 0), [=, this, wanted = std::move(wanted),
                                                     reply = std::move(reply)]() mutable {
    if (!up(id)) {
      kernel_->after(prop, [reply = std::move(reply)] { reply({Reply::kRefused, 0}); });
      return;
    }
    const Micros work = extra_work + nodes_[id].node.base_service_time();
    run_on(id, work, [=, this, wanted = std::move(wanted), reply = std::move(reply)](bool ok) mutable {
      if (!ok) {
        kernel_->after(prop, [reply = std::move(reply)] { reply({Reply::kRefused, 0}); });
        return;
      }
      Reply r;
      std::uint64_t payload = 0;
      auto& store = nodes_[id].node.store();
      switch (op) {
        case MemOp::kGet:
          if (auto e = store.get_entry(key)) {
            r = {Reply::kHit, e->digest};
            payload = e->size;
          }
          break;
        case MemOp::kSet:
          store.set(key, size, digest);
          r = {Reply::kStored, 0};
          break;
        case MemOp::kProbe:
          r = {Reply::kStored, 0};
          break;
      }
      const std::uint64_t bits = (payload + net_.header_bytes) * 8;
      transmit(id, flow, bits, std::move(wanted), [=, this, reply = std::move(reply)]() mutable {
        kernel_->after(prop, [r, reply = std::move(reply)] { reply(r); });
      });
    });
  });
}

void Cluster::crash(NodeId id) {
  auto& rt = nodes_.at(id);
  rt.node.crash();
  rt.cpu_free_at = kernel_->now();
}

void Cluster::restart(NodeId id) {
  auto& rt = nodes_.at(id);
  rt.node.restart();
  rt.cpu_free_at = std::max(rt.cpu_free_at, kernel_->now());
}

void Cluster::set_cpu_share(NodeId id, double share) {
  auto& rt = nodes_.at(id);
  rt.node.state().cpu_share = share;
  rt.share_changes.emplace_back(kernel_->now(), share);
}

void Cluster::set_link_factor(LinkId link, double factor) {
  links_.at(link).factor = factor;
  for (const auto& spec : topology_->nodes)
    if (spec.link == link) nodes_[spec.id].node.state().link_factor = factor;
}

std::vector<double> Cluster::hog_seconds(NodeId id) const {
  std::vector<double> out(windows_, 0.0);
  const auto& changes = nodes_.at(id).share_changes;
  const Micros horizon = static_cast<Micros>(windows_) * kWindow;
  double share = 1.0;
  Micros since = 0;
  auto add = [&](Micros from, Micros to, double hog) {
    from = std::max<Micros>(from, 0);
    to = std::min(to, horizon);
    for (Micros t = from; t < to;) {
      auto w = static_cast<std::size_t>(t / kWindow);
      Micros end = std::min<Micros>(to, static_cast<Micros>(w + 1) * kWindow);
      out[w] += hog * static_cast<double>(end - t) / 1e6;
      t = end;
    }
  };
  for (const auto& [at, s] : changes) {
    add(since, at, 1.0 - share);
    share = s;
    since = at;
  }
  add(since, horizon, 1.0 - share);
  return out;
}

}  // namespace cachemw
