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

#include "cachemw/faults.h"

#include <algorithm>
#include <cmath>

#include "cachemw/errors.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

FaultKind parse_fault_kind(const std::string& s) {
  if (s == "crash") return FaultKind::kCrash;
  if (s == "overload") return FaultKind::kOverload;
  if (s == "throttle") return FaultKind::kThrottle;
  throw ConfigError("fault kind must be crash, overload or throttle");
}

std::string to_string(FaultKind k) {
  switch (k) {
    case FaultKind::kCrash: return "crash";
    case FaultKind::kOverload: return "overload";
    case FaultKind::kThrottle: return "throttle";
  }
  return "?";
}

namespace {

Micros seconds(const json& f, const char* key, const std::string& where) {
  if (!f.contains(key)) throw ConfigError(where + "." + key + " is required");
  const double s = get_or<double>(f, key, 0, where);
  if (!std::isfinite(s)) throw ConfigError(where + "." + key + " must be finite");
  return static_cast<Micros>(std::llround(s * 1e6));
}

std::vector<std::size_t> indices(const json& f, const char* key, const std::string& where) {
  const auto& v = f.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + " must be a non-empty list");
  std::vector<std::size_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long long>() < 0)
      throw ConfigError(where + "." + key + " entries must be non-negative integers");
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

}  // namespace

std::vector<FaultSpec> parse_faults(const json& section, const ClusterTopology& topo, FaultWindow window) {
  std::vector<FaultSpec> out;
  if (section.is_null()) return out;
  if (!section.is_array()) throw ConfigError("faults must be a list");
  for (std::size_t i = 0; i < section.size(); ++i) {
    const auto& f = section[i];
    const std::string where = "faults[" + std::to_string(i) + "]";
    check_keys(f, where, {"kind", "nodes", "hosts", "links", "start_s", "end_s", "severity", "outside_fault_phase"});
    FaultSpec spec;
    spec.kind = parse_fault_kind(get_or<std::string>(f, "kind", "", where));
    int selectors = static_cast<int>(f.contains("nodes")) + f.contains("hosts") + f.contains("links");
    if (selectors != 1) throw ConfigError(where + " needs exactly one of nodes, hosts or links");
    if (f.contains("nodes")) {
      for (auto n : indices(f, "nodes", where)) {
        if (n >= topo.nodes.size()) throw ConfigError(where + " targets unknown node " + std::to_string(n));
        spec.targets.push_back(static_cast<NodeId>(n));
      }
    } else if (f.contains("hosts")) {
      for (auto h : indices(f, "hosts", where)) {
        if (h >= topo.hosts.size()) throw ConfigError(where + " targets unknown host group " + std::to_string(h));
        spec.targets.insert(spec.targets.end(), topo.hosts[h].begin(), topo.hosts[h].end());
      }
    } else {
      if (spec.kind != FaultKind::kThrottle) throw ConfigError(where + ": only throttle faults target links");
      for (auto l : indices(f, "links", where)) {
        if (l >= topo.links.size()) throw ConfigError(where + " targets unknown link " + std::to_string(l));
        for (const auto& n : topo.nodes)
          if (n.link == l) spec.targets.push_back(n.id);
      }
    }
    if (spec.kind == FaultKind::kThrottle) {
      for (NodeId n : spec.targets) spec.links.push_back(topo.nodes[n].link);
      std::sort(spec.links.begin(), spec.links.end());
      spec.links.erase(std::unique(spec.links.begin(), spec.links.end()), spec.links.end());
      spec.targets.clear();
      for (const auto& n : topo.nodes)
        if (std::binary_search(spec.links.begin(), spec.links.end(), n.link)) spec.targets.push_back(n.id);
    }
    std::sort(spec.targets.begin(), spec.targets.end());
    spec.targets.erase(std::unique(spec.targets.begin(), spec.targets.end()), spec.targets.end());
    spec.start = seconds(f, "start_s", where);
    spec.end = seconds(f, "end_s", where);
    if (spec.start >= spec.end) throw ConfigError(where + ": start_s must be before end_s");
    switch (spec.kind) {
      case FaultKind::kCrash:
        if (f.contains("severity")) throw ConfigError(where + ": crash faults take no severity");
        break;
      case FaultKind::kOverload:
        spec.severity = get_or(f, "severity", 0.9, where);
        if (!(spec.severity > 0 && spec.severity < 1)) throw ConfigError(where + ": overload severity must be in (0, 1)");
        break;
      case FaultKind::kThrottle:
        spec.severity = get_or(f, "severity", 10.0, where);
        if (!(spec.severity >= 1)) throw ConfigError(where + ": throttle divisor must be >= 1");
        break;
    }
    if (!get_or(f, "outside_fault_phase", false, where) && (spec.start < window.start || spec.end > window.end))
      throw ConfigError(where + " lies outside the fault phase");
    out.push_back(std::move(spec));
  }
  std::stable_sort(out.begin(), out.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.start < b.start; });
  return out;
}

FaultInjector::FaultInjector(Kernel& kernel, Cluster& cluster, std::vector<FaultSpec> schedule,
                             RestartHook on_restart)
    : kernel_(&kernel),
      cluster_(&cluster),
      schedule_(std::move(schedule)),
      on_restart_(std::move(on_restart)),
      state_(cluster.size()),
      throttles_(cluster.topology().links.size()) {}

void FaultInjector::install(Micros origin) {
  for (const auto& f : schedule_) {
    kernel_->schedule(origin + f.start, [this, &f] { apply(f); });
    kernel_->schedule(origin + f.end, [this, &f] { revert(f); });
  }
}

void FaultInjector::apply(const FaultSpec& f) {
  if (f.kind == FaultKind::kThrottle) {
    for (LinkId l : f.links) {
      throttles_[l].push_back(f.severity);
      refresh_link(l);
    }
    return;
  }
  for (NodeId n : f.targets) {
    auto& s = state_[n];
    switch (f.kind) {
      case FaultKind::kCrash: ++s.crashes; break;
      case FaultKind::kOverload: s.overloads.push_back(f.severity); break;
      case FaultKind::kThrottle: break;
    }
    refresh(n);
  }
}

void FaultInjector::revert(const FaultSpec& f) {
  auto drop = [](std::vector<double>& v, double x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it != v.end()) v.erase(it);
  };
  if (f.kind == FaultKind::kThrottle) {
    for (LinkId l : f.links) {
      drop(throttles_[l], f.severity);
      refresh_link(l);
    }
    return;
  }
  for (NodeId n : f.targets) {
    auto& s = state_[n];
    switch (f.kind) {
      case FaultKind::kCrash: --s.crashes; break;
      case FaultKind::kOverload: drop(s.overloads, f.severity); break;
      case FaultKind::kThrottle: break;
    }
    refresh(n);
  }
}

void FaultInjector::refresh(NodeId n) {
  const auto& s = state_[n];
  double hog = 0;
  for (double o : s.overloads) hog = std::max(hog, o);
  cluster_->set_cpu_share(n, 1.0 - hog);
  if (s.crashes > 0 && cluster_->up(n)) {
    cluster_->crash(n);
  } else if (s.crashes == 0 && !cluster_->up(n)) {
    cluster_->restart(n);
    if (on_restart_) on_restart_(n);
  }
}

void FaultInjector::refresh_link(LinkId l) {
  double divisor = 1;
  for (double t : throttles_[l]) divisor = std::max(divisor, t);
  cluster_->set_link_factor(l, divisor);
}

}  // namespace cachemw
