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

#include "cachemw/workload.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "cachemw/errors.h"
#include "cachemw/simkernel.h"
#include "json_util.h"

namespace cachemw {

using detail::check_keys;
using detail::get_or;
using nlohmann::json;

WorkloadConfig parse_workload(const json& section, const std::string& base_dir) {
  const std::string where = "workload";
  check_keys(section, where,
             {"get_fraction", "key_count", "zipf_s", "value_size", "target_rate", "clients",
              "connections_per_server", "client_timeout_ms", "dataset"});
  WorkloadConfig c;
  c.get_fraction = get_or(section, "get_fraction", c.get_fraction, where);
  c.key_count = get_or(section, "key_count", c.key_count, where);
  c.zipf_s = get_or(section, "zipf_s", c.zipf_s, where);
  c.target_rate = get_or(section, "target_rate", c.target_rate, where);
  c.clients = get_or(section, "clients", c.clients, where);
  c.connections_per_server = get_or(section, "connections_per_server", c.connections_per_server, where);
  c.client_timeout = get_or<Micros>(section, "client_timeout_ms", c.client_timeout / 1000, where) * 1000;
  c.dataset = get_or<std::string>(section, "dataset", "", where);
  if (section.contains("value_size")) {
    const auto& v = section.at("value_size");
    const std::string vw = "workload.value_size";
    check_keys(v, vw, {"kind", "bytes", "median_bytes", "sigma", "cap_bytes"});
    auto kind = get_or<std::string>(v, "kind", "lognormal", vw);
    if (kind == "fixed") {
      c.value.fixed = true;
      c.value.fixed_bytes = get_or(v, "bytes", c.value.fixed_bytes, vw);
    } else if (kind == "lognormal") {
      c.value.median_bytes = get_or(v, "median_bytes", c.value.median_bytes, vw);
      c.value.sigma = get_or(v, "sigma", c.value.sigma, vw);
    } else {
      throw ConfigError("workload.value_size.kind must be lognormal or fixed");
    }
    c.value.cap_bytes = get_or(v, "cap_bytes", c.value.cap_bytes, vw);
  }
  if (!(c.get_fraction >= 0 && c.get_fraction <= 1)) throw ConfigError("get_fraction must be in [0, 1]");
  if (!(c.target_rate > 0)) throw ConfigError("target_rate must be > 0");
  if (c.key_count == 0) throw ConfigError("key_count must be >= 1");
  if (c.zipf_s < 0) throw ConfigError("zipf_s must be >= 0");
  if (c.clients == 0) throw ConfigError("clients must be >= 1");
  if (c.connections_per_server == 0) throw ConfigError("connections_per_server must be >= 1");
  if (c.client_timeout <= 0) throw ConfigError("client_timeout_ms must be > 0");
  if (c.value.cap_bytes == 0 || c.value.median_bytes <= 0 || c.value.sigma < 0 ||
      (c.value.fixed && c.value.fixed_bytes == 0))
    throw ConfigError("value sizes must be positive");
  if (!c.dataset.empty() && std::filesystem::path(c.dataset).is_relative() && !base_dir.empty())
    c.dataset = (std::filesystem::path(base_dir) / c.dataset).string();
  return c;
}

KeySpace make_keyspace(const WorkloadConfig& cfg, std::uint64_t seed) {
  KeySpace ks;
  if (!cfg.dataset.empty()) {
    std::ifstream in(cfg.dataset);
    if (!in) throw IoError(cfg.dataset, "cannot open dataset");
    std::string line;
    std::size_t lineno = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0)
        throw ConfigError(cfg.dataset + ":" + std::to_string(lineno) + ": expected key<TAB>size");
      std::string key = line.substr(0, tab);
      unsigned long size = 0;
      try {
        std::size_t pos = 0;
        size = std::stoul(line.substr(tab + 1), &pos);
        if (pos != line.size() - tab - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(cfg.dataset + ":" + std::to_string(lineno) + ": bad size");
      }
      if (size == 0) throw ConfigError(cfg.dataset + ":" + std::to_string(lineno) + ": size must be > 0");
      if (!seen.insert(key).second)
        throw ConfigError(cfg.dataset + ":" + std::to_string(lineno) + ": duplicate key");
      ks.names.push_back(std::move(key));
      ks.sizes.push_back(static_cast<std::uint32_t>(size));
    }
    if (ks.names.empty()) throw ConfigError(cfg.dataset + ": dataset is empty");
    return ks;
  }
  static const char kAlphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  auto rng = derive_stream(seed, "keys");
  ks.names.reserve(cfg.key_count);
  for (std::size_t i = 0; i < cfg.key_count; ++i) {
    std::string name = "k" + std::to_string(i) + ":";
    for (int c = 0; c < 10; ++c) name.push_back(kAlphabet[rng() % 62]);
    ks.names.push_back(std::move(name));
  }
  return ks;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller, one output per call.
  double u1 = 1.0 - uniform01(rng);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

ZipfSampler::ZipfSampler(std::size_t n, double s) : cdf_(n) {
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += s == 0 ? 1.0 : std::pow(static_cast<double>(i + 1), -s);
    cdf_[i] = acc;
  }
  for (auto& v : cdf_) v /= acc;
}

std::size_t ZipfSampler::sample(std::mt19937_64& rng) const {
  double u = uniform01(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double ZipfSampler::mass(std::size_t rank) const {
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

std::uint32_t draw_value_size(const ValueSizeModel& m, std::mt19937_64& rng) {
  if (m.fixed) return std::min(m.fixed_bytes, m.cap_bytes);
  double v = m.median_bytes * std::exp(m.sigma * standard_normal(rng));
  v = std::clamp(std::round(v), 1.0, static_cast<double>(m.cap_bytes));
  return static_cast<std::uint32_t>(v);
}

Generator::Generator(const WorkloadConfig& cfg, const KeySpace& keys, std::mt19937_64 rng)
    : cfg_(&cfg), keys_(&keys), zipf_(keys.names.size(), cfg.zipf_s), rng_(std::move(rng)) {}

RequestSpec Generator::next() {
  RequestSpec r;
  t_us_ += -std::log(1.0 - uniform01(rng_)) * 1e6 / cfg_->target_rate;
  r.at = static_cast<Micros>(t_us_);
  r.op = uniform01(rng_) < cfg_->get_fraction ? Op::kGet : Op::kSet;
  r.key = zipf_.sample(rng_);
  if (r.op == Op::kSet)
    r.size = keys_->sizes.empty() ? draw_value_size(cfg_->value, rng_) : keys_->sizes[r.key];
  r.client = static_cast<std::uint32_t>(rng_() % cfg_->clients);
  return r;
}

}  // namespace cachemw
