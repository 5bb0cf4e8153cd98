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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cachemw/errors.h"
#include "cachemw/simkernel.h"

namespace cachemw {
namespace {

using nlohmann::json;

TEST(Workload, GetShareNearConfigured) {
  WorkloadConfig cfg;
  cfg.key_count = 1000;
  auto keys = make_keyspace(cfg, 1);
  Generator gen(cfg, keys, derive_stream(7, "workload"));
  int gets = 0;
  for (int i = 0; i < 10'000; ++i) gets += gen.next().op == Op::kGet;
  EXPECT_GE(gets, 7800);
  EXPECT_LE(gets, 8200);
}

TEST(Workload, UniformWhenExponentIsZero) {
  WorkloadConfig cfg;
  cfg.key_count = 10;
  cfg.zipf_s = 0;
  auto keys = make_keyspace(cfg, 1);
  Generator gen(cfg, keys, derive_stream(11, "workload"));
  std::vector<int> freq(10);
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ++freq[gen.next().key];
  const double p = 0.1, sigma = std::sqrt(n * p * (1 - p));
  for (int f : freq) EXPECT_LE(std::abs(f - n * p), 3 * sigma);
}

TEST(Workload, ZipfHeadMatchesDirectMass) {
  // Direct computation: H(1000, 1) / H(100000, 1) = 0.61914.
  WorkloadConfig cfg;
  cfg.key_count = 100'000;
  cfg.zipf_s = 1.0;
  auto keys = make_keyspace(cfg, 1);
  Generator gen(cfg, keys, derive_stream(3, "workload"));
  int head = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) head += gen.next().key < 1000;
  const double share = static_cast<double>(head) / n;
  EXPECT_GT(share, 0.20);
  EXPECT_NEAR(share, 0.61914, 0.01);
}

TEST(Workload, ArrivalsArePoissonAtTargetRate) {
  WorkloadConfig cfg;
  cfg.key_count = 100;
  cfg.target_rate = 2000;
  auto keys = make_keyspace(cfg, 1);
  Generator gen(cfg, keys, derive_stream(5, "workload"));
  RequestSpec last;
  for (int i = 0; i < 20'000; ++i) last = gen.next();
  EXPECT_NEAR(static_cast<double>(last.at) / 1e6, 10.0, 0.3);
}

TEST(Workload, DeterministicPerSeed) {
  WorkloadConfig cfg;
  cfg.key_count = 500;
  auto keys = make_keyspace(cfg, 9);
  Generator a(cfg, keys, derive_stream(9, "workload")), b(cfg, keys, derive_stream(9, "workload"));
  for (int i = 0; i < 1000; ++i) {
    auto x = a.next(), y = b.next();
    ASSERT_EQ(x.at, y.at);
    ASSERT_EQ(x.key, y.key);
    ASSERT_EQ(x.size, y.size);
    ASSERT_EQ(x.client, y.client);
  }
}

TEST(Workload, LognormalMedianAndCap) {
  ValueSizeModel m;
  auto rng = derive_stream(1, "sizes");
  std::vector<std::uint32_t> v;
  for (int i = 0; i < 20'001; ++i) v.push_back(draw_value_size(m, rng));
  std::nth_element(v.begin(), v.begin() + 10'000, v.end());
  EXPECT_NEAR(v[10'000], 1024, 50);
  EXPECT_LE(*std::max_element(v.begin(), v.end()), 64u * 1024);
  EXPECT_GE(*std::min_element(v.begin(), v.end()), 1u);
}

TEST(Workload, ParseRejectsBadValues) {
  EXPECT_THROW(parse_workload(json{{"get_fraction", 1.5}}, ""), ConfigError);
  EXPECT_THROW(parse_workload(json{{"target_rate", 0}}, ""), ConfigError);
  EXPECT_THROW(parse_workload(json{{"key_count", 0}}, ""), ConfigError);
  EXPECT_THROW(parse_workload(json{{"bogus", 1}}, ""), ConfigError);
  auto c = parse_workload(json{{"value_size", {{"kind", "fixed"}, {"bytes", 100}}}}, "");
  EXPECT_TRUE(c.value.fixed);
}

TEST(Workload, DatasetImport) {
  auto dir = std::filesystem::temp_directory_path() / "cachemw_ds";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "rows.tsv") << "alpha\t100\nbeta\t2500\n";
    std::ofstream(dir / "bad.tsv") << "alpha 100\n";
  }
  auto cfg = parse_workload(json{{"dataset", "rows.tsv"}}, dir.string());
  auto ks = make_keyspace(cfg, 1);
  ASSERT_EQ(ks.names.size(), 2u);
  EXPECT_EQ(ks.names[1], "beta");
  EXPECT_EQ(ks.sizes[1], 2500u);
  auto bad = parse_workload(json{{"dataset", "bad.tsv"}}, dir.string());
  EXPECT_THROW(make_keyspace(bad, 1), ConfigError);
  auto missing = parse_workload(json{{"dataset", "none.tsv"}}, dir.string());
  EXPECT_THROW(make_keyspace(missing, 1), IoError);
}

}  // namespace
}  // namespace cachemw
