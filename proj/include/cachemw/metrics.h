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

// Per-second windows and phase summaries of client-visible outcomes plus
// node utilization. Latency statistics cover successful replies (done and
// miss); errors are counted but carry no latency sample.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cachenode.h"

namespace cachemw {

class Cluster;

enum class Outcome { kDone, kMiss, kErrorTimeout, kErrorConn, kErrorQuorum };
constexpr std::size_t kOutcomeKinds = 5;
std::string to_string(Outcome o);

struct Phase {
  std::string name;
  Micros start = 0;
  Micros end = 0;
};

struct LatencyStats {
  std::uint64_t count = 0;
  double mean = 0;
  double stddev = 0;
  Micros p50 = 0;
  Micros p95 = 0;
  Micros p99 = 0;
};

/// Nearest-rank percentile of sorted samples; 0 when empty.
Micros nearest_rank(const std::vector<Micros>& sorted, double pct);
LatencyStats latency_stats(std::vector<Micros> samples);

struct MetricsWindow {
  std::int64_t t = 0;
  std::array<std::uint64_t, kOutcomeKinds> counts{};
  LatencyStats latency;
  std::vector<double> node_cpu;
  std::vector<double> node_netbits;
};

struct PhaseSummary {
  Phase phase;
  std::array<std::uint64_t, kOutcomeKinds> counts{};
  std::uint64_t completed = 0;
  double done_per_s = 0;
  LatencyStats latency;
  // Requests that touched no degraded node.
  LatencyStats clean_latency;
  std::vector<double> node_cpu;  // mean utilization per node
};

struct Report {
  std::vector<MetricsWindow> windows;
  std::vector<PhaseSummary> phases;
  std::uint64_t total_completed = 0;
};

class Recorder {
 public:
  Recorder(std::size_t windows, std::vector<Phase> phases);

  /// `t` past the last window is clamped into it.
  void record(Outcome outcome, Micros latency, Micros t, bool clean = true);
  std::uint64_t recorded() const { return recorded_; }

  Report finalize(const Cluster& cluster) const;

 private:
  struct Bucket {
    std::array<std::uint64_t, kOutcomeKinds> counts{};
    std::vector<Micros> latencies;
    std::vector<Micros> clean;
  };
  std::vector<Bucket> buckets_;
  std::vector<Phase> phases_;
  std::uint64_t recorded_ = 0;
};

/// Throws IoError naming the path when it cannot be written.
void export_csv(const Report& report, const std::string& path);
nlohmann::json summary_json(const Report& report, const nlohmann::json& config, std::uint64_t seed);
nlohmann::json phase_json(const PhaseSummary& p);
void write_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace cachemw
