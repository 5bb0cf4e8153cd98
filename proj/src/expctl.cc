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

#include "cachemw/expctl.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cachemw/errors.h"
#include "cachemw/experiment.h"
#include "cachemw/strategy_replicating_router.h"

namespace cachemw {

using nlohmann::json;

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TopologyError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: malformed document: " << e.what() << "\n";
    return kExitConfig;
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<std::uint64_t> seeds_for(const Scenario& sc, const RunOptions& opt) {
  if (!opt.seed && !opt.repetitions) return sc.seeds;
  const std::uint64_t first = opt.seed.value_or(sc.seeds.front());
  const std::size_t n = opt.repetitions.value_or(1);
  if (n < 1) throw ConfigError("--repetitions must be >= 1");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(first + i);
  return out;
}

CapacityResult capacity_probe(const Scenario& base, std::uint64_t seed) {
  Scenario sc = base;
  sc.faults.clear();
  sc.doc["faults"] = json::array();
  sc.phases = {sc.capacity.duration_s, 0, 0};
  CapacityResult result;
  auto probe = [&](double rate) {
    sc.workload.target_rate = rate;
    sc.doc["workload"]["target_rate"] = rate;
    const auto run = run_once(sc, seed);
    const auto& ph = run.report.phases.front();
    const std::uint64_t errors = ph.counts[2] + ph.counts[3] + ph.counts[4];
    const double err_rate = ph.completed ? static_cast<double>(errors) / static_cast<double>(ph.completed) : 0.0;
    const double p99 = static_cast<double>(ph.latency.p99) / 1000.0;
    const bool ok = p99 <= sc.capacity.p99_bound_ms && err_rate < sc.capacity.max_error_rate;
    result.probes.push_back({rate, p99, err_rate, ok});
    return ok;
  };
  double lo = sc.capacity.rate_min, hi = sc.capacity.rate_max;
  if (probe(hi)) {
    result.rate = hi;
    return result;
  }
  if (!probe(lo)) {
    result.rate = 0;
    return result;
  }
  for (std::size_t i = 0; i < sc.capacity.iterations; ++i) {
    const double mid = std::sqrt(lo * hi);
    (probe(mid) ? lo : hi) = mid;
  }
  result.rate = lo;
  return result;
}

int cmd_run(const std::string& path, const RunOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(path);
    const auto seeds = seeds_for(sc, opt);
    const std::string dir = opt.out.value_or(sc.output);
    std::vector<RunResult> runs;
    for (auto seed : seeds) {
      runs.push_back(run_once(sc, seed));
      write_run(sc, runs.back(), dir + "/seed-" + std::to_string(seed));
      out << sc.name << " seed " << seed << ": " << runs.back().issued << " requests\n";
    }
    const json summary = aggregate(sc, runs);
    write_json(summary, dir + "/summary.json");
    for (const auto& p : summary["phases"])
      out << "  " << p["phase"].get<std::string>() << ": done " << fmt("%.2f%%", p["done_pct"].get<double>())
          << ", miss " << fmt("%.2f%%", p["miss_pct"].get<double>()) << ", errors "
          << fmt("%.2f%%", p["error_pct"].get<double>()) << ", "
          << fmt("%.1f done/s", p["done_per_s"].get<double>()) << ", mean "
          << fmt("%.3f ms", p["lat_mean_us"].get<double>() / 1000) << "\n";
    return kExitOk;
  });
}

int cmd_compare(const std::vector<std::string>& dirs, const std::optional<std::string>& csv_path,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
    std::vector<json> sums;
    for (const auto& d : dirs) sums.push_back(read_json(d + "/summary.json"));
    auto plan = [](const json& s) {
      json p = json::array();
      for (const auto& ph : s.at("phases")) p.push_back({ph.at("phase"), ph.at("start_s"), ph.at("end_s")});
      return p;
    };
    for (std::size_t i = 1; i < sums.size(); ++i)
      if (plan(sums[i]) != plan(sums[0]))
        throw ConfigError("runs " + dirs[0] + " and " + dirs[i] + " have different phase plans");
    std::ostringstream csv;
    csv << "run,strategy,phase,done_pct,miss_pct,error_pct,done_per_s,lat_mean_us,lat_std_us,lat_p99_us,"
           "delta_done_pct,delta_lat_mean_us\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-28s %-18s %-9s %8s %8s %8s %10s %10s %10s %9s %10s\n", "run", "strategy",
                  "phase", "done%", "miss%", "err%", "done/s", "mean_ms", "std_ms", "d_done%", "d_mean_ms");
    out << line;
    for (std::size_t i = 0; i < sums.size(); ++i) {
      const auto& phases = sums[i].at("phases");
      for (std::size_t p = 0; p < phases.size(); ++p) {
        const auto& ph = phases[p];
        const auto& ref = sums[0].at("phases")[p];
        const double done = ph.at("done_pct"), mean = ph.at("lat_mean_us");
        const double d_done = done - ref.at("done_pct").get<double>();
        const double d_mean = mean - ref.at("lat_mean_us").get<double>();
        const std::string name = sums[i].value("name", dirs[i]);
        const std::string strategy = sums[i].value("strategy", "?");
        std::snprintf(line, sizeof line, "%-28s %-18s %-9s %8.2f %8.2f %8.2f %10.1f %10.3f %10.3f %+9.2f %+10.3f\n",
                      name.c_str(), strategy.c_str(), ph.at("phase").get<std::string>().c_str(), done,
                      ph.at("miss_pct").get<double>(), ph.at("error_pct").get<double>(),
                      ph.at("done_per_s").get<double>(), mean / 1000, ph.at("lat_std_us").get<double>() / 1000,
                      d_done, d_mean / 1000);
        out << line;
        std::snprintf(line, sizeof line, "%s,%s,%s,%.4f,%.4f,%.4f,%.3f,%.3f,%.3f,%.0f,%.4f,%.3f\n", name.c_str(),
                      strategy.c_str(), ph.at("phase").get<std::string>().c_str(), done,
                      ph.at("miss_pct").get<double>(), ph.at("error_pct").get<double>(),
                      ph.at("done_per_s").get<double>(), mean, ph.at("lat_std_us").get<double>(),
                      ph.at("lat_p99_us").get<double>(), d_done, d_mean);
        csv << line;
      }
    }
    if (csv_path) {
      std::ofstream f(*csv_path, std::ios::binary);
      if (!f) throw IoError(*csv_path, "cannot open for writing");
      f << csv.str();
      if (!f) throw IoError(*csv_path, "write failed");
    } else {
      out << "\n" << csv.str();
    }
    return kExitOk;
  });
}

int cmd_capacity(const std::string& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(path);
    const auto res = capacity_probe(sc, sc.seeds.front());
    for (const auto& p : res.probes)
      out << fmt("rate %10.1f", p.rate) << fmt("  p99 %8.3f ms", p.p99_ms) << fmt("  errors %.5f", p.error_rate)
          << (p.ok ? "  ok\n" : "  over\n");
    out << fmt("capacity %.1f req/s\n", res.rate);
    return kExitOk;
  });
}

int cmd_route(const std::string& path, const std::string& op, const std::string& key, std::uint32_t client,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json doc = read_json(path);
    if (doc.value("kind", "") != "replicating_router")
      throw ConfigError("route queries need a replicating_router run state");
    Op o;
    if (op == "get") o = Op::kGet;
    else if (op == "set") o = Op::kSet;
    else throw ConfigError("op must be get or set");
    const auto& state = doc.at("state");
    const RouterConfig cfg = parse_router_config(state.at("strategy"));
    const auto pools = state.at("pools").get<std::vector<std::vector<NodeId>>>();
    const RouterTable table(cfg, pools);
    std::size_t nodes = 0;
    for (const auto& p : pools)
      for (NodeId n : p) nodes = std::max<std::size_t>(nodes, n + 1);
    HealthTable health(cfg, table, nodes);
    const auto statuses = state.at("health").get<std::vector<std::string>>();
    for (NodeId n = 0; n < statuses.size() && n < nodes; ++n) {
      if (statuses[n] == "soft_tko") health.set_status(n, Health::kSoftTko);
      else if (statuses[n] == "hard_tko") health.set_status(n, Health::kHardTko);
    }
    const auto r = admin_route(table, health, o, key, client);
    out << op << " " << key << " slice " << table.slice_of(key) << "\n  destinations:";
    for (NodeId n : r.destinations) out << " mc" << n;
    out << "\n  skipped:";
    for (NodeId n : r.skipped) out << " mc" << n << "(" << statuses.at(n) << ")";
    out << "\n";
    return kExitOk;
  });
}

}  // namespace cachemw
