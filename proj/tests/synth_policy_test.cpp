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

#include <fstream>
#include <random>
#include <sstream>

#include "adfp/countermeasures.hpp"
#include "adfp/synth.hpp"
#include "test_support.hpp"

namespace adfp {
namespace {

TEST(SolveDistribution, Examples) {
  EXPECT_EQ(solve_distribution(4, 1.0), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(solve_distribution(1, 0.3), (std::vector<double>{1.0}));
  EXPECT_NEAR(solve_distribution(3, 1e-9)[0], 1.0, 1e-6);
  EXPECT_THROW(solve_distribution(0, 0.5), Error);
  EXPECT_THROW(solve_distribution(3, 1.5), Error);
}

// Normalized entropy of a probability vector, evaluated directly.
long double direct_h(const std::vector<double>& p) {
  long double h = 0;
  for (double x : p) {
    if (x > 0) h -= static_cast<long double>(x) * std::log2(static_cast<long double>(x));
  }
  return h / std::log2(static_cast<long double>(p.size()));
}

TEST(SolveDistribution, TwoValueExample) {
  const auto p = solve_distribution(2, 0.469);
  EXPECT_NEAR(p[0], 0.90, 0.005);
  EXPECT_NEAR(static_cast<double>(direct_h(p)), 0.469, 1e-6);
}

TEST(SolveDistribution, HitsTargetsAcrossSupports) {
  for (std::size_t m : {2u, 3u, 10u, 1000u, 20000u}) {
    for (double h : {0.05, 0.2, 0.468, 0.75, 0.99}) {
      const auto p = solve_distribution(m, h);
      ASSERT_EQ(p.size(), m);
      double sum = 0;
      for (double x : p) sum += x;
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_NEAR(static_cast<double>(direct_h(p)), h, 1e-6) << m << " " << h;
    }
  }
}

GeneratorSpec tiny_spec(std::uint64_t devices, std::uint64_t impressions) {
  GeneratorSpec spec;
  auto& pop = spec.population;
  pop.n_devices = devices;
  pop.config_shares.rows = {{{"desktop", "Windows", "Chrome", "web"}, 1.0}};
  pop.impressions = {ImpressionSpec::Kind::kFixed, 3.0, impressions};
  pop.seed = 5;
  spec.default_params = {1'000'000, 1.0, 1.0};
  return spec;
}

TEST(Generate, DistinctDevicesDistinctDigests) {
  const auto reg = testing::toy_registry({"a", "b"});
  const auto s = generate(tiny_spec(10, 1), reg);
  ASSERT_EQ(s.size(), 10u);
  std::set<std::string> digests;
  for (const auto& x : s) {
    digests.insert(make_fingerprint(x.attributes, reg, Channel::kWeb).digest);
  }
  EXPECT_EQ(digests.size(), 10u);
}

TEST(Generate, OneDeviceManyImpressions) {
  const auto reg = testing::toy_registry({"a", "b"});
  const auto s = generate(tiny_spec(1, 5), reg);
  ASSERT_EQ(s.size(), 5u);
  const auto ds = build_fingerprint_dataset(s, reg);
  ASSERT_EQ(ds.groups.size(), 1u);
  EXPECT_EQ(ds.groups[0].ground_truth, 1);
  EXPECT_EQ(ds.groups[0].n_samples, 5u);
}

TEST(Generate, ForcedCollisionIsNotUnique) {
  const auto reg = testing::toy_registry({"a"});
  auto spec = tiny_spec(2, 2);
  spec.default_params = {1, 0.0, 1.0};
  const auto s = generate(spec, reg);
  ASSERT_EQ(s.size(), 4u);
  const auto ds = build_fingerprint_dataset(s, reg);
  ASSERT_EQ(ds.groups.size(), 1u);
  EXPECT_EQ(ds.groups[0].ground_truth, 0);
  EXPECT_EQ(ds.groups[0].n_ad_ids, 2u);
}

TEST(Generate, DeterministicUnderSeed) {
  const auto reg = builtin_registry();
  auto spec = benchmark_spec(3);
  spec.population.n_devices = 300;
  spec.population.max_samples = 0;
  const auto a = generate(spec, reg);
  const auto b = generate(spec, reg);
  std::ostringstream sa, sb;
  write_samples_jsonl(sa, a, reg);
  write_samples_jsonl(sb, b, reg);
  EXPECT_EQ(sa.str(), sb.str());
  spec.population.seed = 4;
  std::ostringstream sc;
  write_samples_jsonl(sc, generate(spec, reg), reg);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Generate, EmpiricalEntropyNearTarget) {
  const auto reg = testing::toy_registry({"a"});
  auto spec = tiny_spec(40'000, 1);
  spec.default_params = {4, 0.5, 1.0};
  std::map<std::string, std::uint64_t> counts;
  for (const auto& x : generate(spec, reg)) ++counts[*x.attributes.get("a")];
  ASSERT_EQ(counts.size(), 4u);
  std::vector<std::uint64_t> c;
  for (const auto& [v, n] : counts) c.push_back(n);
  EXPECT_NEAR(static_cast<double>(testing::oracle_normalized_entropy(c)), 0.5, 0.02);
}

TEST(Generate, AppChannelCarriesOnlyAppScope) {
  const auto reg = builtin_registry();
  GeneratorSpec spec;
  spec.population.n_devices = 5;
  spec.population.config_shares.rows = {{{"mobile", "Android", "webview", "app"}, 1.0}};
  const auto s = generate(spec, reg);
  ASSERT_FALSE(s.empty());
  const auto app = scoped_attributes(reg, Channel::kApp);
  for (const auto& x : s) {
    EXPECT_EQ(x.attributes.values.size(), app.size());
    EXPECT_TRUE(covers_scope(x.attributes, reg, Channel::kApp));
  }
}

TEST(Generate, RejectsInvalidSpecs) {
  const auto reg = testing::toy_registry({"a"});
  auto spec = tiny_spec(1, 1);
  spec.population.dnt_rate = 2.0;
  EXPECT_THROW(generate(spec, reg), Error);
  spec = tiny_spec(1, 1);
  spec.population.config_shares.rows = {{{"desktop", "*", "Chrome", "web"}, 1.0}};
  EXPECT_THROW(generate(spec, reg), Error);
  spec = tiny_spec(1, 1);
  AttributeDistSpec d;
  d.meta_attribute = "nope";
  spec.dists.push_back(d);
  EXPECT_THROW(generate(spec, reg), Error);
}

TEST(GeneratorSpecJson, RoundTrip) {
  const auto spec = benchmark_spec(9);
  const auto back =
      generator_spec_from_json(nlohmann::json::parse(generator_spec_to_json(spec).dump()));
  EXPECT_EQ(generator_spec_to_json(back).dump(), generator_spec_to_json(spec).dump());
}

TEST(Oracle, EmptyAndSingleton) {
  const auto reg = testing::toy_registry({"a"});
  EXPECT_TRUE(oracle_uniqueness({}, reg).empty());
  const std::vector<Sample> one = {testing::make_sample("1", "ad", {{"a", "x"}})};
  const auto o = oracle_uniqueness(one, reg);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o.begin()->second.n_samples, 1u);
  EXPECT_TRUE(build_fingerprint_dataset(one, reg).groups.empty());
}

TEST(Oracle, AgreesWithFingerprintingCore) {
  const auto reg = builtin_registry();
  auto spec = benchmark_spec(12);
  spec.population.n_devices = 2000;
  spec.population.max_samples = 0;
  const auto samples = filter_raw(generate(spec, reg));
  const auto ds = build_fingerprint_dataset(samples, reg);
  const auto oracle = oracle_uniqueness(samples, reg);
  std::size_t repeated = 0;
  for (const auto& [key, label] : oracle) repeated += label.n_samples >= 2 ? 1 : 0;
  EXPECT_EQ(repeated, ds.groups.size());
  for (const auto& g : ds.groups) {
    const auto it = oracle.find({g.config, g.fingerprint.digest});
    ASSERT_NE(it, oracle.end());
    EXPECT_EQ(it->second.ground_truth, g.ground_truth);
    EXPECT_EQ(it->second.n_samples, g.n_samples);
  }
}

StatsReport table_fixture() {
  std::ifstream in(std::string(ADFP_DATA_DIR) + "/discrimination_table.csv");
  EXPECT_TRUE(in.good());
  return read_stats_csv(in);
}

std::set<std::string> shieldf_names() {
  return {kShieldfMetas.begin(), kShieldfMetas.end()};
}

TEST(SelectBlockset, TableFixtureGivesBoldSet) {
  const auto p = select_blockset(table_fixture(), SelectorConfig::shieldf_reconstruction());
  EXPECT_EQ(p.blocked, shieldf_names());
  EXPECT_EQ(p.provenance, PolicyProvenance::kThresholdSelector);
}

TEST(SelectBlockset, ThresholdExamples) {
  SelectorConfig none;
  none.cardinality_min = std::numeric_limits<double>::infinity();
  none.entropy_min = 1.1;
  EXPECT_TRUE(select_blockset(table_fixture(), none).blocked.empty());

  StatsReport one;
  AttributeStats s;
  s.meta_attribute = "Canvas";
  s.config = testing::web_config();
  s.reported = true;
  s.cardinality = 100;
  s.normalized_entropy = 0.5;
  one.rows.push_back(s);
  EXPECT_EQ(select_blockset(one, SelectorConfig{}).blocked, std::set<std::string>{"Canvas"});
  s.cardinality = 25;
  one.rows[0] = s;
  EXPECT_TRUE(select_blockset(one, SelectorConfig{}).blocked.empty());
  EXPECT_THROW(select_blockset(StatsReport{}, SelectorConfig{}), Error);
  SelectorConfig clash;
  clash.include_overrides = {"Canvas"};
  clash.exclude_overrides = {"Canvas"};
  EXPECT_THROW(select_blockset(one, clash), Error);
}

TEST(ShieldfPolicy, WebAndApp) {
  const auto reg = builtin_registry();
  const auto web = shieldf_policy(reg, Channel::kWeb);
  EXPECT_EQ(web.blocked, shieldf_names());
  const auto app = shieldf_policy(reg, Channel::kApp);
  EXPECT_EQ(app.blocked.size(), 10u);
  std::set<std::string> dropped;
  for (const auto& m : web.blocked) {
    if (!app.blocked.count(m)) dropped.insert(m);
  }
  EXPECT_EQ(dropped, (std::set<std::string>{"User Permissions state", "Bluetooth availability"}));
}

TEST(ShieldfPolicy, RegistryMismatch) {
  const auto reg = testing::toy_registry({"a"});
  try {
    shieldf_policy(reg, Channel::kWeb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegistryMismatch);
  }
}

TEST(SplitViolations, DetectsRefinement) {
  const auto reg = testing::toy_registry({"a", "b"});
  std::vector<Sample> s = {testing::make_sample("1", "x", {{"a", "1"}, {"b", "1"}}),
                           testing::make_sample("2", "x", {{"a", "1"}, {"b", "1"}}),
                           testing::make_sample("3", "y", {{"a", "1"}, {"b", "2"}}),
                           testing::make_sample("4", "y", {{"a", "1"}, {"b", "2"}})};
  const auto fine = build_fingerprint_dataset(s, reg);
  BlockingPolicy p;
  p.name = "b";
  p.blocked = {"b"};
  const auto coarse = build_fingerprint_dataset(s, reg, 1, &p);
  ASSERT_EQ(fine.groups.size(), 2u);
  ASSERT_EQ(coarse.groups.size(), 1u);
  EXPECT_EQ(coarse.groups[0].ground_truth, 0);
  EXPECT_EQ(split_violations(fine, coarse), 0u);
  EXPECT_EQ(split_violations(coarse, fine), 1u);
}

std::vector<Sample> small_population() {
  const auto reg = builtin_registry();
  auto spec = benchmark_spec(21);
  spec.population.n_devices = 1500;
  spec.population.max_samples = 0;
  return filter_raw(generate(spec, reg));
}

ClassifierParams quick_params() {
  ClassifierParams p;
  p.gbdt.n_rounds = 15;
  p.gbdt.max_depth = 3;
  p.max_reference_rows = 300;
  return p;
}

TEST(Countermeasure, IdentityHasZeroDeltasAndShieldfReduces) {
  const auto reg = builtin_registry();
  const auto samples = small_population();
  const auto results = benchmark_masks(samples, {identity_policy(), shieldf_policy(reg, Channel::kWeb)},
                                       reg, Channel::kWeb, quick_params(), 7);
  ASSERT_EQ(results.size(), 2u);
  for (const auto& [config, d] : results[0].deltas) {
    EXPECT_EQ(results[0].after.at(config).tv, results[0].before.at(config).tv);
    EXPECT_EQ(results[0].after.at(config).mv, results[0].before.at(config).mv);
    EXPECT_EQ(results[0].after.at(config).accuracy, results[0].before.at(config).accuracy);
    ASSERT_TRUE(d.tv.has_value());
    EXPECT_EQ(*d.tv, 0.0);
  }
  for (const auto& [config, b] : results[1].before) {
    EXPECT_LT(results[1].after.at(config).tv, b.tv) << config.key();
  }
  std::ostringstream csv;
  write_comparison_csv(csv, results);
  EXPECT_NE(csv.str().find("shieldf"), std::string::npos);
}

TEST(Countermeasure, BlockEverythingLeavesOneGroupPerConfig) {
  const auto reg = builtin_registry();
  const auto samples = small_population();
  BlockingPolicy all;
  all.name = "all";
  for (const auto& g : reg.meta_groups()) all.blocked.insert(g.name);
  const auto r = evaluate_countermeasure(samples, all, reg, Channel::kWeb, quick_params(), 7);
  ASSERT_FALSE(r.after.empty());
  for (const auto& [config, a] : r.after) {
    EXPECT_EQ(a.n_f, 1u);
    EXPECT_TRUE(a.tv == 0.0 || a.tv == 1.0);
  }
}

TEST(Countermeasure, ErrorsPropagate) {
  const auto reg = builtin_registry();
  const auto samples = small_population();
  EXPECT_THROW(benchmark_masks(samples, {}, reg, Channel::kWeb, quick_params(), 7), Error);
  EXPECT_THROW(evaluate_countermeasure(samples, identity_policy(), reg, Channel::kApp,
                                       quick_params(), 7),
               Error);
  BlockingPolicy bad;
  bad.name = "bad";
  bad.blocked = {"nope"};
  EXPECT_THROW(evaluate_countermeasure(samples, bad, reg, Channel::kWeb, quick_params(), 7),
               Error);
}

TEST(SelectorConfigJson, RoundTrip) {
  const auto c = SelectorConfig::shieldf_reconstruction();
  const auto back =
      selector_config_from_json(nlohmann::json::parse(selector_config_to_json(c).dump()));
  EXPECT_EQ(back.include_overrides, c.include_overrides);
  EXPECT_EQ(back.exclude_overrides, c.exclude_overrides);
  EXPECT_EQ(back.cardinality_min, c.cardinality_min);
}

}  // namespace
}  // namespace adfp
