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

#include "cachemw/errors.h"
#include "cachemw/strategy.h"
#include "cachemw/strategy_proxy_pool.h"
#include "cachemw/strategy_replicating_router.h"
#include "cachemw/strategy_token_ring.h"

namespace cachemw {

std::unique_ptr<Strategy> make_strategy(const nlohmann::json& section, SimContext& ctx) {
  if (!section.is_object() || !section.contains("kind") || !section.at("kind").is_string())
    throw ConfigError("strategy section needs a string 'kind'");
  const auto kind = parse_strategy_kind(section.at("kind").get<std::string>());
  if (kind != ctx.cluster.topology().kind) throw ConfigError("strategy kind does not match the topology");
  switch (kind) {
    case StrategyKind::kProxyPool:
      return std::make_unique<ProxyPoolStrategy>(parse_proxy_config(section), ctx);
    case StrategyKind::kReplicatingRouter:
      return std::make_unique<ReplicatingRouterStrategy>(parse_router_config(section), ctx);
    case StrategyKind::kTokenRing:
      return std::make_unique<TokenRingStrategy>(parse_ring_config(section), ctx);
  }
  throw ConfigError("unknown strategy kind");
}

}  // namespace cachemw
