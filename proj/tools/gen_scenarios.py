#!/usr/bin/env python3
# Copyright 2026 The cachemw Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the scenario library and the acceptance set under scenarios/."""

import json
import os
import sys

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "scenarios")

RATES = {"proxy_pool": 16500, "replicating_router": 4700, "token_ring": 5500}
OVERLOAD = 0.99
SHORT = {"proxy_pool": "proxy", "replicating_router": "router", "token_ring": "ring"}


def strategy(kind, phases):
    s = {"kind": kind}
    if kind == "proxy_pool":
        # retry scales with the phase length: 30 s at 200 s phases
        s["server_retry_timeout_ms"] = phases * 150
    return s


def base(kind, name, phases, calibration):
    topo = {"groups": 1 if kind == "proxy_pool" else 3}
    if kind != "token_ring":
        topo["middleware_instances"] = 3
    return {
        "name": name,
        "calibration": calibration,
        "topology": topo,
        "strategy": strategy(kind, phases),
        "workload": {"target_rate": RATES[kind]},
        "phases": {"warmup_s": phases, "fault_s": phases, "recovery_s": phases},
        "faults": [],
    }


def fault(kind, start, end, **target):
    f = {"kind": kind, "start_s": start, "end_s": end}
    f.update(target)
    return f


# Nodes picked so each added node covers a new slice and, for the replicated
# layouts, a new pool or rack.
SPREAD = [0, 11, 22, 3, 14, 25, 6, 17, 28, 9]


def crash_nodes(kind, k):
    return list(range(1, k + 1)) if kind == "proxy_pool" else SPREAD[:k]


def campaign(kind, phases, calibration):
    short = SHORT[kind]
    start, end = phases, 2 * phases
    out = {}

    def add(suffix, faults):
        doc = base(kind, f"{short}-{suffix}", phases, calibration)
        doc["faults"] = faults
        out[f"{short}-{suffix}"] = doc

    add("baseline", [])
    for k in range(1, 11):
        add(f"crash-{k}", [fault("crash", start, end, nodes=crash_nodes(kind, k))])
    for k in (1, 2, 4, 8):
        add(f"overload-{k}", [fault("overload", start, end, nodes=SPREAD[:k], severity=OVERLOAD)])
    add("overload-pair", [fault("overload", start, end, nodes=[0, 10], severity=OVERLOAD)])
    add("throttle-host", [fault("throttle", start, end, hosts=[0])])
    return out


ACCEPTANCE = {
    "proxy-baseline", "proxy-crash-2", "proxy-crash-4", "proxy-crash-6", "proxy-overload-1",
    "proxy-overload-4", "proxy-throttle-host", "router-baseline", "router-throttle-host",
    "ring-baseline", "ring-overload-1", "ring-overload-2", "ring-overload-4", "ring-overload-8",
    "ring-throttle-host",
}


def acceptance(phases, calibration):
    start, end = phases, 2 * phases
    docs = {}
    for kind in RATES:
        for name, doc in campaign(kind, phases, calibration).items():
            if name in ACCEPTANCE:
                docs[name] = doc
    # Replica sets: node n is slice n % 10 of pool (rack) n // 10.
    extra = {
        "router-crash-replica": ("replicating_router", [fault("crash", start, end, nodes=[0])]),
        "router-crash-two-replicas": ("replicating_router", [fault("crash", start, end, nodes=[0, 10])]),
        "router-overload-disjoint": ("replicating_router", [fault("overload", start, end, nodes=[0, 11], severity=OVERLOAD)]),
        "router-overload-same-key": ("replicating_router", [fault("overload", start, end, nodes=[0, 10], severity=OVERLOAD)]),
        "ring-quorum-loss": ("token_ring", [fault("crash", start, end, nodes=[0, 10])]),
        "ring-coordinator-crash": ("token_ring", [fault("crash", start, end, nodes=[5])]),
    }
    for name, (kind, faults) in extra.items():
        doc = base(kind, name, phases, calibration)
        doc["faults"] = faults
        docs[name] = doc
    return docs


def write(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def main():
    for kind in RATES:
        for name, doc in campaign(kind, 200, "../calibration.json").items():
            write(os.path.join(ROOT, SHORT[kind], name + ".json"), doc)
    for name, doc in acceptance(20, "../calibration.json").items():
        write(os.path.join(ROOT, "acceptance", name + ".json"), doc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
