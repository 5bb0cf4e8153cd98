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

// Timed crash, overload and throttle faults over nodes, host groups and
// links. Overlapping faults on one node compose: a crash dominates, the
// strongest overload and the largest throttle divisor win.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cluster.h"
#include "cachemw/simkernel.h"
#include "cachemw/topology.h"

namespace cachemw {

enum class FaultKind { kCrash, kOverload, kThrottle };
FaultKind parse_fault_kind(const std::string& s);
std::string to_string(FaultKind k);

struct FaultSpec {
  FaultKind kind = FaultKind::kCrash;
  std::vector<NodeId> targets;  // resolved node ids
  std::vector<LinkId> links;    // throttle: the targets' host uplinks
  Micros start = 0;
  Micros end = 0;
  double severity = 0;  // hog share (overload) or bandwidth divisor (throttle)
};

struct FaultWindow {
  Micros start = 0;
  Micros end = 0;
};

/// Parses the `faults` list. Targets are given as "nodes", "hosts" (host
/// group indices) or "links" (link ids). A throttle acts on the shared
/// uplink, so it covers every node on the selected nodes' links; times as start_s/end_s from t=0 of
/// the measured run. Faults must lie inside `window` unless the fault sets
/// "outside_fault_phase": true. Result is sorted by start.
std::vector<FaultSpec> parse_faults(const nlohmann::json& section, const ClusterTopology& topo,
                                    FaultWindow window);

class FaultInjector {
 public:
  using RestartHook = std::function<void(NodeId)>;

  FaultInjector(Kernel& kernel, Cluster& cluster, std::vector<FaultSpec> schedule,
                RestartHook on_restart);

  /// Schedules every apply/revert relative to `origin`.
  void install(Micros origin);
  const std::vector<FaultSpec>& schedule() const { return schedule_; }

 private:
  struct NodeFaults {
    int crashes = 0;
    std::vector<double> overloads;
  };
  void apply(const FaultSpec& f);
  void revert(const FaultSpec& f);
  void refresh(NodeId n);
  void refresh_link(LinkId l);

  Kernel* kernel_;
  Cluster* cluster_;
  std::vector<FaultSpec> schedule_;
  RestartHook on_restart_;
  std::vector<NodeFaults> state_;
  std::vector<std::vector<double>> throttles_;  // per link
};

}  // namespace cachemw
