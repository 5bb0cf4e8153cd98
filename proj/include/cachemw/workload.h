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

// Open-loop request generator: Poisson arrivals at a target rate, get/set
// mix, Zipf key popularity and lognormal (or fixed, or imported) value sizes.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachemw/cachenode.h"

namespace cachemw {

enum class Op { kGet, kSet };

struct ValueSizeModel {
  bool fixed = false;
  std::uint32_t fixed_bytes = 1024;
  double median_bytes = 1024;
  double sigma = 1.0;
  std::uint32_t cap_bytes = 64 * 1024;
};

struct WorkloadConfig {
  double get_fraction = 0.8;
  std::size_t key_count = 100'000;
  double zipf_s = 0.99;  // 0 = uniform
  ValueSizeModel value;
  double target_rate = 5000;  // requests per second
  std::size_t clients = 60;
  std::size_t connections_per_server = 1;
  Micros client_timeout = 2'000'000;
  std::string dataset;  // optional file of key<TAB>size_bytes rows
};

/// Keys are `workload` section fields; relative dataset paths resolve
/// against `base_dir`.
WorkloadConfig parse_workload(const nlohmann::json& section, const std::string& base_dir);

struct KeySpace {
  std::vector<std::string> names;
  std::vector<std::uint32_t> sizes;  // fixed per key when imported, else empty
};

/// Generated names are random but fixed by `seed`; an imported dataset
/// supplies both names and sizes. Throws IoError / ConfigError.
KeySpace make_keyspace(const WorkloadConfig& cfg, std::uint64_t seed);

// Portable draws (identical output across standard libraries).
double uniform01(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s);
  /// Rank in [0, n); rank 0 is the most popular.
  std::size_t sample(std::mt19937_64& rng) const;
  double mass(std::size_t rank) const;

 private:
  std::vector<double> cdf_;
};

std::uint32_t draw_value_size(const ValueSizeModel& m, std::mt19937_64& rng);

struct RequestSpec {
  Micros at = 0;
  Op op = Op::kGet;
  KeyId key = 0;
  std::uint32_t size = 0;  // sets only
  std::uint32_t client = 0;
};

class Generator {
 public:
  Generator(const WorkloadConfig& cfg, const KeySpace& keys, std::mt19937_64 rng);
  RequestSpec next();

 private:
  const WorkloadConfig* cfg_;
  const KeySpace* keys_;
  ZipfSampler zipf_;
  std::mt19937_64 rng_;
  double t_us_ = 0;
};

}  // namespace cachemw
