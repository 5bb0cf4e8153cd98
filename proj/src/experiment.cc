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

#include "cachemw/experiment.h"

#include <cmath>
#include <filesystem>

#include "cachemw/cluster.h"
#include "cachemw/errors.h"
#include "cachemw/faults.h"
#include "cachemw/simkernel.h"
#include "cachemw/strategy.h"

namespace cachemw {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr Micros kSecond = 1'000'000;
constexpr Micros kDrainCap = 600 * kSecond;

}  // namespace

RunResult run_once(const Scenario& sc, std::uint64_t seed, std::function<void(const Request&, Outcome)> observer) {
  const auto phases = sc.phases.phases();
  const Micros end = phases.back().end;
  const auto windows = static_cast<std::size_t>(std::ceil(sc.phases.total_s()));

  Kernel kernel;
  Cluster cluster(kernel, sc.topology, sc.network, windows);
  Recorder recorder(windows, phases);
  const KeySpace keys = make_keyspace(sc.workload, derive_stream(seed, "keyspace")());
  SimContext ctx(kernel, cluster, recorder, keys, sc.workload, seed);
  ctx.observer = std::move(observer);
  auto strategy = make_strategy(sc.doc.at("strategy"), ctx);

  auto warm_rng = derive_stream(seed, "warmup");
  for (KeyId k = 0; k < keys.names.size(); ++k) {
    const std::uint32_t size = keys.sizes.empty() ? draw_value_size(sc.workload.value, warm_rng) : keys.sizes[k];
    strategy->warm(k, size, splitmix64(seed ^ (0xa5a5ull << 40) ^ k) | 1);
  }

  FaultInjector faults(kernel, cluster, sc.faults, [&](NodeId n) { strategy->on_restart(n); });
  faults.install(0);

  Generator gen(sc.workload, keys, derive_stream(seed, "workload"));
  std::uint64_t issued = 0;
  std::function<void(RequestSpec)> arrive = [&](RequestSpec spec) {
    auto req = std::make_shared<Request>();
    req->id = issued++;
    req->client = spec.client;
    req->op = spec.op;
    req->key = spec.key;
    req->size = spec.size;
    req->digest = spec.op == Op::kSet ? splitmix64(seed ^ req->id) | 1 : 0;
    req->issued = kernel.now();
    kernel.after(sc.workload.client_timeout, [&ctx, req] { ctx.finish(req, Outcome::kErrorTimeout); });
    strategy->submit(req);
    RequestSpec next = gen.next();
    if (next.at < end) kernel.schedule(next.at, [&arrive, next] { arrive(next); });
  };
  RequestSpec first = gen.next();
  if (first.at < end) kernel.schedule(first.at, [&arrive, first] { arrive(first); });

  Micros t = end + sc.workload.client_timeout + kSecond;
  kernel.run_until(t);
  while (strategy->occupied() > 0 && t < end + kDrainCap) kernel.run_until(t += kSecond);

  if (ctx.finished() != issued || recorder.recorded() != issued)
    throw InternalError("outcome conservation violated: issued " + std::to_string(issued) + ", recorded " +
                        std::to_string(recorder.recorded()));
  if (strategy->occupied() != 0) throw InternalError("middleware budget leaked after drain");

  RunResult r;
  r.seed = seed;
  r.report = recorder.finalize(cluster);
  if (r.report.total_completed != issued) throw InternalError("window totals disagree with issued requests");
  r.strategy_stats = strategy->stats();
  r.route_state = strategy->route_state();
  r.issued = issued;
  r.kernel_digest = kernel.trace_digest();
  return r;
}

void write_run(const Scenario& sc, const RunResult& run, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, ec.message());
  export_csv(run.report, dir + "/metrics.csv");
  json summary = summary_json(run.report, sc.doc, run.seed);
  summary["strategy_stats"] = run.strategy_stats;
  summary["issued"] = run.issued;
  write_json(summary, dir + "/summary.json");
  json state = {{"kind", to_string(sc.kind)}, {"seed", run.seed}, {"state", run.route_state}};
  write_json(state, dir + "/run_state.json");
}

json aggregate(const Scenario& sc, const std::vector<RunResult>& runs) {
  json out;
  out["name"] = sc.name;
  out["strategy"] = to_string(sc.kind);
  out["config"] = sc.doc;
  json seeds = json::array(), stats = json::array();
  for (const auto& r : runs) {
    seeds.push_back(r.seed);
    stats.push_back(r.strategy_stats);
  }
  out["seeds"] = seeds;
  out["strategy_stats"] = stats;
  json phases = json::array();
  const double n = static_cast<double>(runs.size());
  for (std::size_t p = 0; p < sc.phases.phases().size(); ++p) {
    const auto& ph = runs.front().report.phases[p].phase;
    std::array<std::uint64_t, kOutcomeKinds> counts{};
    std::uint64_t completed = 0;
    double done_per_s = 0, mean = 0, stddev = 0, p95 = 0, p99 = 0, clean_mean = 0;
    std::vector<double> cpu(sc.topology.node_count(), 0.0);
    for (const auto& r : runs) {
      const auto& s = r.report.phases[p];
      for (std::size_t k = 0; k < kOutcomeKinds; ++k) counts[k] += s.counts[k];
      completed += s.completed;
      done_per_s += s.done_per_s / n;
      mean += s.latency.mean / n;
      stddev += s.latency.stddev / n;
      p95 += static_cast<double>(s.latency.p95) / n;
      p99 += static_cast<double>(s.latency.p99) / n;
      clean_mean += s.clean_latency.mean / n;
      for (std::size_t i = 0; i < cpu.size() && i < s.node_cpu.size(); ++i) cpu[i] += s.node_cpu[i] / n;
    }
    auto pct = [&](std::uint64_t c) { return completed ? 100.0 * static_cast<double>(c) / static_cast<double>(completed) : 0.0; };
    const std::uint64_t errors = counts[2] + counts[3] + counts[4];
    phases.push_back({{"phase", ph.name},
                      {"start_s", ph.start / 1'000'000},
                      {"end_s", ph.end / 1'000'000},
                      {"completed", completed},
                      {"done", counts[0]},
                      {"misses", counts[1]},
                      {"errors_timeout", counts[2]},
                      {"errors_conn", counts[3]},
                      {"errors_quorum", counts[4]},
                      {"done_pct", pct(counts[0])},
                      {"miss_pct", pct(counts[1])},
                      {"error_pct", pct(errors)},
                      {"done_per_s", done_per_s},
                      {"lat_mean_us", mean},
                      {"lat_std_us", stddev},
                      {"lat_p95_us", p95},
                      {"lat_p99_us", p99},
                      {"clean_lat_mean_us", clean_mean},
                      {"node_cpu", cpu}});
  }
  out["phases"] = phases;
  return out;
}

}  // namespace cachemw
