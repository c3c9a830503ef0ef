// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "adfp/metrics.hpp"
#include "adfp/stats.hpp"
#include "test_support.hpp"

namespace adfp {
namespace {

using testing::oracle_entropy_bits;
using testing::oracle_normalized_entropy;

using Counts = std::vector<std::uint64_t>;

TEST(Entropy, WorkedExample) {
  const Counts c = {8, 4, 4};
  EXPECT_NEAR(shannon_entropy(c), 1.5, 1e-12);
  EXPECT_NEAR(normalized_entropy(c), 1.5 / std::log2(3.0), 1e-12);
}

TEST(Entropy, Boundaries) {
  EXPECT_EQ(shannon_entropy(Counts{7}), 0.0);
  EXPECT_EQ(normalized_entropy(Counts{7}), 0.0);
  EXPECT_NEAR(shannon_entropy(Counts{5, 5, 5, 5}), 2.0, 1e-12);
  EXPECT_NEAR(normalized_entropy(Counts{5, 5, 5, 5}), 1.0, 1e-12);
  try {
    shannon_entropy(Counts{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
  EXPECT_THROW(normalized_entropy(Counts{3, 0}), Error);
}

TEST(Entropy, RandomVectorsAgreeWithOracleAndBounds) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 500; ++t) {
    Counts c(1 + rng() % 60);
    for (auto& x : c) x = 1 + rng() % 500;
    const double h = shannon_entropy(c);
    EXPECT_NEAR(h, static_cast<double>(oracle_entropy_bits(c)), 1e-9);
    EXPECT_NEAR(normalized_entropy(c), static_cast<double>(oracle_normalized_entropy(c)), 1e-9);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(c.size())) + 1e-12);
    const double hn = normalized_entropy(c);
    EXPECT_GE(hn, 0.0);
    EXPECT_LE(hn, 1.0);
  }
}

FingerprintGroup group(const DeviceConfig& config, std::map<std::string, std::string> attrs,
                       int truth = 1, std::optional<int> measured = std::nullopt,
                       std::size_t n_samples = 2) {
  FingerprintGroup g;
  g.config = config;
  for (auto& [k, v] : attrs) g.representative.set(k, v);
  g.ground_truth = truth;
  g.measured = measured;
  g.n_samples = n_samples;
  return g;
}

TEST(ComputeStats, CountsPerConfigAndMeta) {
  const auto reg = testing::toy_registry({"a", "b"});
  const auto cfg = testing::web_config();
  std::vector<FingerprintGroup> groups = {
      group(cfg, {{"a", "x"}}, 1, std::nullopt, 4), group(cfg, {{"a", "x"}}),
      group(cfg, {{"a", "y"}}), group(cfg, {{"a", "z"}})};
  const auto r = compute_stats(groups, reg);
  const auto* a = r.find("a", cfg);
  ASSERT_NE(a, nullptr);
  EXPECT_TRUE(a->reported);
  EXPECT_EQ(a->cardinality, 3u);
  EXPECT_EQ(a->n_observations, 4u);
  EXPECT_NEAR(a->entropy_bits, 1.5, 1e-12);
  const auto* b = r.find("b", cfg);
  ASSERT_NE(b, nullptr);
  EXPECT_FALSE(b->reported);
  EXPECT_EQ(r.reported_count.at(cfg), 1u);

  const auto weighted = compute_stats(groups, reg, StatsWeighting::kSamples);
  const auto* aw = weighted.find("a", cfg);
  EXPECT_EQ(aw->n_observations, 10u);
  EXPECT_NEAR(aw->entropy_bits, static_cast<double>(oracle_entropy_bits({6, 2, 2})), 1e-12);
}

TEST(ComputeStats, SeparatesConfigurations) {
  const auto reg = testing::toy_registry({"a"});
  const auto win = testing::web_config("Windows");
  const auto lin = testing::web_config("Linux");
  const auto r = compute_stats({group(win, {{"a", "x"}}), group(lin, {{"a", "y"}}),
                                group(lin, {{"a", "z"}})},
                               reg);
  EXPECT_EQ(r.find("a", win)->cardinality, 1u);
  EXPECT_EQ(r.find("a", win)->normalized_entropy, 0.0);
  EXPECT_EQ(r.find("a", lin)->cardinality, 2u);
  EXPECT_NEAR(r.find("a", lin)->normalized_entropy, 1.0, 1e-12);
  EXPECT_THROW(compute_stats({}, reg), Error);
}

TEST(ComputeStats, MetaValueConcatenatesMembers) {
  std::vector<AttributeSpec> specs;
  for (const char* n : {"w", "h"}) {
    AttributeSpec s;
    s.name = n;
    s.meta_group = "Screen";
    s.collected = true;
    s.scope = AttributeScope::kAppAndBrowser;
    specs.push_back(s);
  }
  const AttributeRegistry reg("screen", specs);
  AttributeVector v;
  v.set("w", "1920");
  EXPECT_EQ(meta_value(v, "Screen", reg), std::optional<std::string>("1920\x1f\xE2\x88\x85"));
  EXPECT_EQ(meta_value(AttributeVector{}, "Screen", reg), std::nullopt);
  EXPECT_THROW(meta_value(v, "Nope", reg), Error);
}

TEST(StatsCsv, RoundTrip) {
  const auto reg = testing::toy_registry({"a", "b"});
  const auto cfg = testing::web_config();
  const auto r = compute_stats({group(cfg, {{"a", "x"}}), group(cfg, {{"a", "y"}, {"b", "q"}})},
                               reg);
  std::ostringstream out;
  write_stats_csv(out, r);
  std::istringstream in(out.str());
  const auto back = read_stats_csv(in);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].meta_attribute, r.rows[i].meta_attribute);
    EXPECT_EQ(back.rows[i].config, r.rows[i].config);
    EXPECT_EQ(back.rows[i].cardinality, r.rows[i].cardinality);
    EXPECT_NEAR(back.rows[i].normalized_entropy, r.rows[i].normalized_entropy, 1e-6);
  }
}

TEST(Vulnerability, ThreeGroupFixture) {
  const auto cfg = testing::web_config();
  const std::vector<FingerprintGroup> g = {group(cfg, {}, 1, 1, 2), group(cfg, {}, 0, 1, 3),
                                           group(cfg, {}, 1, 0, 5)};
  const auto r = vulnerability(g);
  EXPECT_EQ(r.n_f, 3u);
  EXPECT_EQ(r.n_tf, 2u);
  EXPECT_EQ(r.n_mf, 2u);
  EXPECT_EQ(r.tv, 2.0 / 3.0);
  EXPECT_EQ(r.mv, 2.0 / 3.0);
  EXPECT_EQ(r.accuracy, 1.0 / 3.0);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.tn, 0u);
  const auto w = vulnerability(g, MetricWeighting::kSamples);
  EXPECT_EQ(w.n_f, 10u);
  EXPECT_EQ(w.tv, 7.0 / 10.0);
  EXPECT_EQ(w.mv, 5.0 / 10.0);
  EXPECT_EQ(w.accuracy, 2.0 / 10.0);
}

TEST(Vulnerability, RejectsBadInput) {
  const auto cfg = testing::web_config();
  EXPECT_THROW(vulnerability(std::vector<FingerprintGroup>{}), Error);
  EXPECT_THROW(vulnerability(std::vector<FingerprintGroup>{group(cfg, {}, 1)}), Error);
  EXPECT_THROW(vulnerability(std::vector<FingerprintGroup>{
                   group(cfg, {}, 1, 1), group(testing::web_config("Linux"), {}, 1, 1)}),
               Error);
  const auto by = vulnerability_by_config(
      {group(cfg, {}, 1, 1), group(testing::web_config("Linux"), {}, 0, 0)});
  EXPECT_EQ(by.size(), 2u);
}

TEST(Extrapolate, TwoConfigFixture) {
  const auto win = testing::web_config("Windows");
  const auto lin = testing::web_config("Linux");
  MarketShareTable shares;
  shares.rows = {{ConfigPattern::exact(win), 0.7}, {ConfigPattern::exact(lin), 0.2}};
  EXPECT_EQ(extrapolate({{win, 0.5}, {lin, 0.25}}, shares), 0.7 * 0.5 + 0.2 * 0.25);
  EXPECT_EQ(extrapolate({{win, 0.5}}, shares), 0.7 * 0.5);
}

TEST(Extrapolate, WildcardsAndOverlap) {
  const auto win = testing::web_config("Windows");
  const auto lin = testing::web_config("Linux");
  MarketShareTable shares;
  ConfigPattern any_desktop;
  any_desktop.device_type = "desktop";
  shares.rows = {{any_desktop, 0.5}};
  try {
    extrapolate({{win, 0.5}, {lin, 0.25}}, shares);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverlappingPattern);
  }
  EXPECT_EQ(extrapolate({{win, 0.4}}, shares), 0.5 * 0.4);
  shares.rows = {{ConfigPattern::exact(win), 0.8}, {ConfigPattern::exact(lin), 0.3}};
  EXPECT_THROW(extrapolate({{win, 0.4}}, shares), Error);
}

TEST(Extrapolate, LinearInMv) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::map<DeviceConfig, double> mv1, mv2;
    MarketShareTable shares;
    double budget = 1.0;
    for (int i = 0; i < 5; ++i) {
      const auto cfg = testing::web_config("os" + std::to_string(i));
      mv1[cfg] = u(rng);
      mv2[cfg] = u(rng);
      const double s = budget * u(rng) * 0.5;
      budget -= s;
      shares.rows.push_back({ConfigPattern::exact(cfg), s});
    }
    const double a = u(rng), b = u(rng);
    std::map<DeviceConfig, double> mix;
    for (const auto& [c, v] : mv1) mix[c] = a * v + b * mv2.at(c);
    EXPECT_NEAR(extrapolate(mix, shares),
                a * extrapolate(mv1, shares) + b * extrapolate(mv2, shares), 1e-12);
  }
}

TEST(CompareReports, PercentChangeAndUndefined) {
  VulnerabilityReport before, after;
  before.config = after.config = testing::web_config();
  before.tv = 0.5;
  after.tv = 0.25;
  before.mv = 0.0;
  after.mv = 0.1;
  before.accuracy = after.accuracy = 0.9;
  const auto d = compare_reports(before, after);
  EXPECT_EQ(d.tv, std::optional<double>(-50.0));
  EXPECT_FALSE(d.mv.has_value());
  EXPECT_EQ(d.accuracy, std::optional<double>(0.0));
  EXPECT_EQ(format_delta(d.tv), "-50.00");
  EXPECT_EQ(format_delta(d.mv), "NA");
  after.config = testing::web_config("Linux");
  EXPECT_THROW(compare_reports(before, after), Error);
}

TEST(ReportsCsv, RoundTrip) {
  const auto cfg = testing::web_config();
  const auto reports = vulnerability_by_config({group(cfg, {}, 1, 1), group(cfg, {}, 0, 1)});
  std::ostringstream out;
  write_reports_csv(out, reports);
  std::istringstream in(out.str());
  const auto back = read_reports_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back.at(cfg).n_f, 2u);
  EXPECT_EQ(back.at(cfg).tv, 0.5);
  EXPECT_EQ(back.at(cfg).mv, 1.0);
}

TEST(SharesCsv, ParsesAndValidates) {
  std::istringstream ok("device_type,os,agent,channel,share\ndesktop,Windows,*,web,0.6\n");
  const auto t = read_shares_csv(ok);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].pattern.agent, "*");
  std::istringstream over(
      "device_type,os,agent,channel,share\ndesktop,A,*,web,0.6\ndesktop,B,*,web,0.6\n");
  EXPECT_THROW(read_shares_csv(over), Error);
}

}  // namespace
}  // namespace adfp
