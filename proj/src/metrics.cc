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

#include "cachemw/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cachemw/cluster.h"
#include "cachemw/errors.h"

namespace cachemw {

namespace {
constexpr Micros kWindow = 1'000'000;

std::size_t idx(Outcome o) { return static_cast<std::size_t>(o); }
}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kDone: return "done";
    case Outcome::kMiss: return "miss";
    case Outcome::kErrorTimeout: return "error_timeout";
    case Outcome::kErrorConn: return "error_conn";
    case Outcome::kErrorQuorum: return "error_quorum";
  }
  return "?";
}

Micros nearest_rank(const std::vector<Micros>& sorted, double pct) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencyStats latency_stats(std::vector<Micros> samples) {
  LatencyStats s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0;
  for (Micros v : samples) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(samples.size());
  double sq = 0;
  for (Micros v : samples) sq += (static_cast<double>(v) - s.mean) * (static_cast<double>(v) - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(samples.size()));
  s.p50 = nearest_rank(samples, 50);
  s.p95 = nearest_rank(samples, 95);
  s.p99 = nearest_rank(samples, 99);
  return s;
}

Recorder::Recorder(std::size_t windows, std::vector<Phase> phases)
    : buckets_(std::max<std::size_t>(windows, 1)), phases_(std::move(phases)) {}

void Recorder::record(Outcome outcome, Micros latency, Micros t, bool clean) {
  auto w = t < 0 ? 0 : static_cast<std::size_t>(t / kWindow);
  w = std::min(w, buckets_.size() - 1);
  auto& b = buckets_[w];
  ++b.counts[idx(outcome)];
  if (outcome == Outcome::kDone || outcome == Outcome::kMiss) {
    b.latencies.push_back(latency);
    if (clean) b.clean.push_back(latency);
  }
  ++recorded_;
}

Report Recorder::finalize(const Cluster& cluster) const {
  Report r;
  const std::size_t n_nodes = cluster.size();
  std::vector<std::vector<double>> hog(n_nodes);
  for (NodeId id = 0; id < n_nodes; ++id) hog[id] = cluster.hog_seconds(id);

  for (std::size_t w = 0; w < buckets_.size(); ++w) {
    MetricsWindow mw;
    mw.t = static_cast<std::int64_t>(w);
    mw.counts = buckets_[w].counts;
    mw.latency = latency_stats(buckets_[w].latencies);
    for (NodeId id = 0; id < n_nodes; ++id) {
      const auto& u = cluster.usage(id);
      double cpu = (w < u.cpu_work_us.size() ? u.cpu_work_us[w] / 1e6 : 0.0) +
                   (w < hog[id].size() ? hog[id][w] : 0.0);
      mw.node_cpu.push_back(std::min(cpu, 1.0));
      mw.node_netbits.push_back(w < u.net_bits.size() ? u.net_bits[w] : 0.0);
    }
    for (auto c : mw.counts) r.total_completed += c;
    r.windows.push_back(std::move(mw));
  }

  for (const auto& ph : phases_) {
    PhaseSummary s;
    s.phase = ph;
    std::vector<Micros> lat, clean;
    s.node_cpu.assign(n_nodes, 0.0);
    std::size_t first = static_cast<std::size_t>(std::max<Micros>(ph.start, 0) / kWindow);
    std::size_t last = std::min(buckets_.size(), static_cast<std::size_t>(ph.end / kWindow));
    for (std::size_t w = first; w < last; ++w) {
      for (std::size_t k = 0; k < kOutcomeKinds; ++k) s.counts[k] += buckets_[w].counts[k];
      lat.insert(lat.end(), buckets_[w].latencies.begin(), buckets_[w].latencies.end());
      clean.insert(clean.end(), buckets_[w].clean.begin(), buckets_[w].clean.end());
      for (NodeId id = 0; id < n_nodes; ++id) s.node_cpu[id] += r.windows[w].node_cpu[id];
    }
    const double secs = static_cast<double>(last > first ? last - first : 0);
    if (secs > 0)
      for (auto& c : s.node_cpu) c /= secs;
    for (auto c : s.counts) s.completed += c;
    s.done_per_s = secs > 0 ? static_cast<double>(s.counts[idx(Outcome::kDone)]) / secs : 0.0;
    s.latency = latency_stats(std::move(lat));
    s.clean_latency = latency_stats(std::move(clean));
    r.phases.push_back(std::move(s));
  }
  return r;
}

void export_csv(const Report& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  const std::size_t n_nodes = report.windows.empty() ? 0 : report.windows[0].node_cpu.size();
  out << "t,done,misses,errors_timeout,errors_conn,errors_quorum,lat_mean_us,lat_std_us,lat_p95_us,lat_p99_us";
  for (std::size_t i = 0; i < n_nodes; ++i) out << ",node_" << i << "_cpu,node_" << i << "_netbits";
  out << '\n';
  char buf[64];
  for (const auto& w : report.windows) {
    out << w.t;
    for (auto c : w.counts) out << ',' << c;
    std::snprintf(buf, sizeof buf, ",%.3f,%.3f", w.latency.mean, w.latency.stddev);
    out << buf << ',' << w.latency.p95 << ',' << w.latency.p99;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.0f", w.node_cpu[i], w.node_netbits[i]);
      out << buf;
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError(path, "write failed");
}

namespace {
nlohmann::json latency_json(const LatencyStats& s) {
  return {{"count", s.count}, {"mean_us", s.mean}, {"std_us", s.stddev},
          {"p50_us", s.p50},  {"p95_us", s.p95},   {"p99_us", s.p99}};
}
}  // namespace

nlohmann::json phase_json(const PhaseSummary& p) {
  nlohmann::json j;
  j["phase"] = p.phase.name;
  j["start_s"] = p.phase.start / kWindow;
  j["end_s"] = p.phase.end / kWindow;
  j["completed"] = p.completed;
  j["done"] = p.counts[idx(Outcome::kDone)];
  j["misses"] = p.counts[idx(Outcome::kMiss)];
  j["errors_timeout"] = p.counts[idx(Outcome::kErrorTimeout)];
  j["errors_conn"] = p.counts[idx(Outcome::kErrorConn)];
  j["errors_quorum"] = p.counts[idx(Outcome::kErrorQuorum)];
  j["done_per_s"] = p.done_per_s;
  j["latency"] = latency_json(p.latency);
  j["clean_latency"] = latency_json(p.clean_latency);
  j["node_cpu"] = p.node_cpu;
  return j;
}

nlohmann::json summary_json(const Report& report, const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  j["config"] = config;
  j["total_completed"] = report.total_completed;
  j["phases"] = nlohmann::json::array();
  for (const auto& p : report.phases) j["phases"].push_back(phase_json(p));
  return j;
}

void write_json(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw IoError(path, "write failed");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace cachemw
