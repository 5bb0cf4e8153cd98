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

#include "cachemw/strategy.h"

#include <algorithm>

#include "cachemw/errors.h"

namespace cachemw {

void SimContext::finish(const RequestPtr& req, Outcome outcome) {
  if (req->finished) return;
  req->finished = true;
  ++finished_;
  recorder.record(outcome, kernel.now() - req->issued, kernel.now(), !req->touched_degraded);
  if (observer) observer(*req, outcome);
}

Micros SimContext::client_arrival(std::uint32_t client, std::uint32_t payload_bytes) {
  if (client >= last_arrival_.size()) last_arrival_.resize(client + 1, 0);
  auto& last = last_arrival_[client];
  last = std::max(last, kernel.now() + cluster.hop(payload_bytes));
  return last;
}

void SimContext::reply_to_client(const RequestPtr& req, Outcome outcome, std::uint32_t payload_bytes) {
  kernel.after(cluster.hop(payload_bytes), [this, req, outcome] { finish(req, outcome); });
}

Micros MiddlewareCpu::run(Micros now, Micros cost) {
  free_at_ = std::max(now, free_at_) + cost;
  busy_ += cost;
  return free_at_;
}

ConnectionPool::ConnectionPool(std::size_t nodes, std::size_t per_server, std::size_t pipeline_depth)
    : cursor_(nodes, 0) {
  conns_.resize(nodes);
  for (auto& c : conns_)
    for (std::size_t i = 0; i < per_server; ++i) c.emplace_back(pipeline_depth);
}

ConnectionQueue& ConnectionPool::next(NodeId node) {
  auto& list = conns_.at(node);
  auto& cur = cursor_[node];
  ConnectionQueue& q = list[cur];
  cur = (cur + 1) % list.size();
  return q;
}

TimeoutFrom parse_timeout_from(const std::string& s) {
  if (s == "send") return TimeoutFrom::kSend;
  if (s == "enqueue") return TimeoutFrom::kEnqueue;
  throw ConfigError("timeout_from must be send or enqueue");
}

void call_with_timeout(SimContext& ctx, ConnectionQueue& conn, TimeoutFrom from, NodeId node,
                       std::uint64_t flow, MemOp op, KeyId key, std::uint32_t size,
                       std::uint64_t digest, Micros timeout, std::function<void(CallResult)> done) {
  auto guard = std::make_shared<CallGuard>();
  auto sent = std::make_shared<bool>(false);
  auto shared_done = std::make_shared<std::function<void(CallResult)>>(std::move(done));
  ConnectionQueue* q = &conn;
  auto arm = [&ctx, guard, sent, q, shared_done, timeout] {
    ctx.kernel.after(timeout, [guard, sent, q, shared_done] {
      if (!guard->claim()) return;
      if (*sent) q->complete();
      (*shared_done)({true, {}});
    });
  };
  if (from == TimeoutFrom::kEnqueue) arm();
  conn.submit([=, &ctx]() -> bool {
    if (guard->done()) return false;
    *sent = true;
    if (from == TimeoutFrom::kSend) arm();
    ctx.cluster.memcached(
        node, flow, op, key, size, digest, 0, [guard] { return !guard->done(); },
        [guard, q, shared_done](Reply r) {
          if (!guard->claim()) return;
          q->complete();
          (*shared_done)({false, r});
        });
    return true;
  });
}

}  // namespace cachemw
