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

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adfp/classifier.hpp"
#include "adfp/csv.hpp"
#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/metrics.hpp"
#include "adfp/policy.hpp"
#include "adfp/registry.hpp"
#include "adfp/stats.hpp"
#include "json.hpp"

namespace adfp {

inline constexpr std::array<std::string_view, 12> kShieldfMetas = {
    "CPU cores",     "Device memory",          "Media devices",    "Languages",
    "User Permissions state", "Storage: quota", "navigator properties", "Canvas",
    "Fonts",         "Bluetooth availability", "WebGL Extensions", "WebGL (Rend - Param)"};

// Not reported inside app webviews, hence absent from the app variant.
inline constexpr std::array<std::string_view, 2> kShieldfWebOnlyMetas = {
    "User Permissions state", "Bluetooth availability"};

struct SelectorConfig {
  double cardinality_min = 25;  // strict: |S| > cardinality_min
  double entropy_min = 0.10;    // h >= entropy_min
  std::set<std::string> include_overrides;
  std::set<std::string> exclude_overrides;

  void validate() const {
    for (const auto& m : include_overrides) {
      if (exclude_overrides.count(m)) {
        fail(ErrorCode::kInvalidArgument, "meta-attribute both included and excluded: " + m);
      }
    }
  }

  // Overrides that turn the threshold rule into the bold set of the
  // discrimination table. The exclusions are a reconstruction: the
  // UX-critical list is inferred from the difference between the threshold
  // result and the bold set.
  static SelectorConfig shieldf_reconstruction() {
    SelectorConfig c;
    c.include_overrides = {"CPU cores", "Device memory", "Bluetooth availability"};
    c.exclude_overrides = {"UserAgent",          "Screen: pixel left", "available height",
                           "available left",     "available top",      "available width",
                           "Audio cxt: base latency"};
    return c;
  }
};

inline SelectorConfig selector_config_from_json(const nlohmann::json& j, SelectorConfig c = {}) {
  try {
    c.cardinality_min = j.value("cardinality_min", c.cardinality_min);
    c.entropy_min = j.value("entropy_min", c.entropy_min);
    if (j.contains("include_overrides")) {
      c.include_overrides = j.at("include_overrides").get<std::set<std::string>>();
    }
    if (j.contains("exclude_overrides")) {
      c.exclude_overrides = j.at("exclude_overrides").get<std::set<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("selector config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::ordered_json selector_config_to_json(const SelectorConfig& c) {
  nlohmann::ordered_json j;
  j["cardinality_min"] = c.cardinality_min;
  j["entropy_min"] = c.entropy_min;
  j["include_overrides"] = c.include_overrides;
  j["exclude_overrides"] = c.exclude_overrides;
  return j;
}

// Threshold rule over every configuration, then overrides.
inline BlockingPolicy select_blockset(const StatsReport& stats, const SelectorConfig& cfg) {
  if (stats.rows.empty()) fail(ErrorCode::kEmptyInput, "no statistics to select from");
  cfg.validate();
  BlockingPolicy p;
  p.name = "threshold-selector";
  p.provenance = PolicyProvenance::kThresholdSelector;
  for (const auto& r : stats.rows) {
    if (r.reported && static_cast<double>(r.cardinality) > cfg.cardinality_min &&
        r.normalized_entropy >= cfg.entropy_min) {
      p.blocked.insert(r.meta_attribute);
    }
  }
  for (const auto& m : cfg.include_overrides) p.blocked.insert(m);
  for (const auto& m : cfg.exclude_overrides) p.blocked.erase(m);
  return p;
}

// The fixed ShieldF set; the app variant omits the web-only metas.
inline BlockingPolicy shieldf_policy(const AttributeRegistry& reg, Channel channel) {
  BlockingPolicy p;
  p.name = channel == Channel::kWeb ? "shieldf" : "shieldf-app";
  p.provenance = PolicyProvenance::kShieldfTable;
  for (auto meta : kShieldfMetas) {
    if (reg.find_meta(meta) == nullptr) {
      fail(ErrorCode::kRegistryMismatch,
           "registry lacks ShieldF meta-attribute: " + std::string(meta));
    }
    const bool web_only = std::find(kShieldfWebOnlyMetas.begin(), kShieldfWebOnlyMetas.end(),
                                    meta) != kShieldfWebOnlyMetas.end();
    if (channel == Channel::kApp && web_only) continue;
    p.blocked.insert(std::string(meta));
  }
  return p;
}

// Built-in policy by name: "identity", "shieldf", "shieldf-app"; anything
// else is read as a policy file path.
inline BlockingPolicy resolve_policy(const std::string& name_or_path, const AttributeRegistry& reg) {
  if (name_or_path == kIdentityPolicyName) return identity_policy();
  if (name_or_path == "shieldf") return shieldf_policy(reg, Channel::kWeb);
  if (name_or_path == "shieldf-app") return shieldf_policy(reg, Channel::kApp);
  auto p = load_policy_file(name_or_path);
  validate_policy(p, reg);
  return p;
}

// Groups of `before` whose samples are spread over several groups of
// `after`. Zero when `after` coarsens `before`.
inline std::size_t split_violations(const FingerprintDataset& before,
                                    const FingerprintDataset& after) {
  std::unordered_map<std::string, std::size_t> group_of;
  for (std::size_t i = 0; i < after.groups.size(); ++i) {
    for (const auto& id : after.groups[i].sample_ids) group_of.emplace(id, i);
  }
  std::size_t violations = 0;
  for (const auto& g : before.groups) {
    std::set<std::size_t> targets;
    for (const auto& id : g.sample_ids) {
      auto it = group_of.find(id);
      targets.insert(it == group_of.end() ? std::numeric_limits<std::size_t>::max()
                                          : it->second);
    }
    if (targets.size() != 1 || targets.count(std::numeric_limits<std::size_t>::max())) {
      ++violations;
    }
  }
  return violations;
}

struct CountermeasureResult {
  std::string policy;
  std::map<DeviceConfig, VulnerabilityReport> before;
  std::map<DeviceConfig, VulnerabilityReport> after;
  std::map<DeviceConfig, MetricDeltas> deltas;
};

namespace internal {

inline std::vector<Sample> channel_samples(const std::vector<Sample>& samples, Channel channel) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.config.channel == channel) out.push_back(s);
  }
  if (out.empty()) {
    fail(ErrorCode::kEmptyInput,
         "no samples in channel " + std::string(to_string(channel)));
  }
  return out;
}

inline std::map<DeviceConfig, VulnerabilityReport> measure(const FingerprintIndex& index,
                                                           const BlockingPolicy* policy,
                                                           const AttributeRegistry& reg,
                                                           const ClassifierParams& params,
                                                           std::uint64_t seed) {
  auto ds = index.build(policy);
  if (ds.groups.empty()) fail(ErrorCode::kEmptyInput, "no fingerprint group repeats");
  measure_uniqueness(ds.groups, reg, params, seed, /*allow_degenerate=*/true);
  return vulnerability_by_config(ds.groups);
}

inline CountermeasureResult compare(const std::string& policy_name,
                                    const std::map<DeviceConfig, VulnerabilityReport>& before,
                                    std::map<DeviceConfig, VulnerabilityReport> after) {
  CountermeasureResult r;
  r.policy = policy_name;
  r.before = before;
  r.after = std::move(after);
  for (const auto& [config, b] : before) {
    auto it = r.after.find(config);
    // Blocking only merges groups, so every configuration survives.
    if (it == r.after.end()) {
      fail(ErrorCode::kInternal, "configuration vanished after blocking: " + config.key());
    }
    r.deltas[config] = compare_reports(b, it->second);
  }
  return r;
}

}  // namespace internal

// Baseline and blocked pipelines (fingerprint, group, label, train, report)
// over the channel's samples with identical parameters and seed.
inline CountermeasureResult evaluate_countermeasure(const std::vector<Sample>& samples,
                                                    const BlockingPolicy& policy,
                                                    const AttributeRegistry& reg, Channel channel,
                                                    const ClassifierParams& params,
                                                    std::uint64_t seed) {
  validate_policy(policy, reg);
  const auto scoped = internal::channel_samples(samples, channel);
  const FingerprintIndex index(scoped, reg);
  const auto before = internal::measure(index, nullptr, reg, params, seed);
  auto after = internal::measure(index, &policy, reg, params, seed);
  return internal::compare(policy.name, before, std::move(after));
}

// One evaluation per policy against a shared baseline.
inline std::vector<CountermeasureResult> benchmark_masks(const std::vector<Sample>& samples,
                                                         const std::vector<BlockingPolicy>& policies,
                                                         const AttributeRegistry& reg,
                                                         Channel channel,
                                                         const ClassifierParams& params,
                                                         std::uint64_t seed) {
  if (policies.empty()) fail(ErrorCode::kInvalidArgument, "no policies to benchmark");
  for (const auto& p : policies) validate_policy(p, reg);
  const auto scoped = internal::channel_samples(samples, channel);
  const FingerprintIndex index(scoped, reg);
  const auto before = internal::measure(index, nullptr, reg, params, seed);
  std::vector<CountermeasureResult> out;
  for (const auto& p : policies) {
    out.push_back(internal::compare(p.name, before,
                                    internal::measure(index, &p, reg, params, seed)));
  }
  return out;
}

inline void write_comparison_csv(std::ostream& out,
                                 const std::vector<CountermeasureResult>& results) {
  csv::write_row(out, {"policy", "device_type", "os", "agent", "channel", "TV", "MV", "A",
                       "dTV_pct", "dMV_pct", "dA_pct"});
  for (const auto& r : results) {
    for (const auto& [config, a] : r.after) {
      // A configuration may first appear after blocking; it has no deltas.
      auto it = r.deltas.find(config);
      const MetricDeltas d = it == r.deltas.end() ? MetricDeltas{} : it->second;
      csv::write_row(out, {r.policy, std::string(to_string(config.device_type)), config.os,
                           config.agent, std::string(to_string(config.channel)),
                           format_fixed(a.tv, 6), format_fixed(a.mv, 6),
                           format_fixed(a.accuracy, 6), format_delta(d.tv), format_delta(d.mv),
                           format_delta(d.accuracy)});
    }
  }
}

}  // namespace adfp
