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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adfp/csv.hpp"
#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/registry.hpp"
#include "adfp/sample.hpp"

namespace adfp {

inline std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// Concatenated value of a meta-attribute: member values in registry order
// joined by U+001F, a missing member written as the missing token. Returns
// nullopt iff every member is missing.
inline std::optional<std::string> meta_value(const AttributeVector& attrs,
                                             std::string_view meta,
                                             const AttributeRegistry& reg) {
  const auto* group = reg.find_meta(meta);
  if (group == nullptr) {
    fail(ErrorCode::kUnknownMeta, "unknown meta-attribute: " + std::string(meta));
  }
  std::string out;
  bool any = false;
  for (std::size_t i = 0; i < group->members.size(); ++i) {
    if (i) out += kUnitSeparator;
    auto value = attrs.get(group->members[i]);
    if (value) {
      any = true;
      append_escaped(out, *value);
    } else {
      out += kMissingToken;
    }
  }
  if (!any) return std::nullopt;
  return out;
}

namespace internal {

inline void check_counts(std::span<const std::uint64_t> counts) {
  if (counts.empty()) fail(ErrorCode::kEmptyInput, "entropy of an empty distribution");
  for (auto c : counts) {
    if (c == 0) fail(ErrorCode::kInvalidArgument, "entropy counts must be positive");
  }
}

}  // namespace internal

// Shannon entropy in bits of the empirical distribution given by `counts`.
inline double shannon_entropy(std::span<const std::uint64_t> counts) {
  internal::check_counts(counts);
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

// Entropy divided by log2(M), M = number of distinct values; 0 when M = 1.
inline double normalized_entropy(std::span<const std::uint64_t> counts) {
  internal::check_counts(counts);
  if (counts.size() == 1) return 0.0;
  const double h = shannon_entropy(counts) / std::log2(static_cast<double>(counts.size()));
  return std::clamp(h, 0.0, 1.0);
}

template <typename Map>
std::vector<std::uint64_t> count_values(const Map& counts) {
  std::vector<std::uint64_t> out;
  out.reserve(counts.size());
  for (const auto& [value, count] : counts) out.push_back(count);
  return out;
}

// Whether observations are distinct fingerprint groups or their samples.
enum class StatsWeighting { kGroups, kSamples };

struct AttributeStats {
  std::string meta_attribute;
  DeviceConfig config;
  bool reported = false;
  std::size_t cardinality = 0;
  double entropy_bits = 0.0;
  double normalized_entropy = 0.0;
  std::uint64_t n_observations = 0;
};

struct StatsReport {
  std::vector<AttributeStats> rows;  // by config, then meta-attribute order
  std::map<DeviceConfig, std::size_t> reported_count;  // |N| per config

  const AttributeStats* find(std::string_view meta, const DeviceConfig& config) const {
    for (const auto& r : rows) {
      if (r.meta_attribute == meta && r.config == config) return &r;
    }
    return nullptr;
  }
};

inline AttributeStats stats_from_counts(std::string meta, DeviceConfig config,
                                        const std::map<std::string, std::uint64_t>& counts) {
  AttributeStats s;
  s.meta_attribute = std::move(meta);
  s.config = std::move(config);
  s.reported = !counts.empty();
  s.cardinality = counts.size();
  for (const auto& [v, c] : counts) s.n_observations += c;
  if (s.reported) {
    const auto cs = count_values(counts);
    s.entropy_bits = shannon_entropy(cs);
    s.normalized_entropy = normalized_entropy(cs);
  }
  return s;
}

// Per (configuration, meta-attribute) discrimination statistics. Missing
// values are excluded from the counts; a meta-attribute with no observed
// value is reported = false.
inline StatsReport compute_stats(const std::vector<FingerprintGroup>& groups,
                                 const AttributeRegistry& reg,
                                 StatsWeighting weighting = StatsWeighting::kGroups) {
  if (groups.empty()) fail(ErrorCode::kEmptyInput, "no fingerprint groups to profile");
  const auto& metas = reg.meta_groups();
  std::map<DeviceConfig, std::vector<std::map<std::string, std::uint64_t>>> cells;
  for (const auto& g : groups) {
    auto& per_meta = cells[g.config];
    if (per_meta.empty()) per_meta.resize(metas.size());
    const std::uint64_t weight =
        weighting == StatsWeighting::kGroups ? 1 : std::max<std::uint64_t>(g.n_samples, 1);
    for (std::size_t m = 0; m < metas.size(); ++m) {
      auto v = meta_value(g.representative, metas[m].name, reg);
      if (v) per_meta[m][*v] += weight;
    }
  }
  StatsReport report;
  for (const auto& [config, per_meta] : cells) {
    std::size_t reported = 0;
    for (std::size_t m = 0; m < metas.size(); ++m) {
      report.rows.push_back(stats_from_counts(metas[m].name, config, per_meta[m]));
      if (report.rows.back().reported) ++reported;
    }
    report.reported_count[config] = reported;
  }
  return report;
}

inline const std::vector<std::string>& stats_csv_header() {
  static const std::vector<std::string> kHeader = {
      "meta_attribute", "device_type", "os", "agent", "channel",
      "reported", "S", "H_bits", "h", "n_obs"};
  return kHeader;
}

inline void write_stats_csv(std::ostream& out, const StatsReport& report) {
  csv::write_row(out, stats_csv_header());
  for (const auto& r : report.rows) {
    csv::write_row(out, {r.meta_attribute, std::string(to_string(r.config.device_type)),
                         r.config.os, r.config.agent, std::string(to_string(r.config.channel)),
                         r.reported ? "1" : "0", std::to_string(r.cardinality),
                         format_fixed(r.entropy_bits, 6), format_fixed(r.normalized_entropy, 6),
                         std::to_string(r.n_observations)});
  }
}

// Reads the stats CSV format back (also the format of the digitized
// discrimination table shipped under data/).
inline StatsReport read_stats_csv(std::istream& in) {
  const auto table = csv::read(in);
  const auto c_meta = table.column("meta_attribute");
  const auto c_type = table.column("device_type");
  const auto c_os = table.column("os");
  const auto c_agent = table.column("agent");
  const auto c_channel = table.column("channel");
  const auto c_reported = table.column("reported");
  const auto c_s = table.column("S");
  const auto c_hbits = table.column("H_bits");
  const auto c_h = table.column("h");
  const auto c_n = table.column("n_obs");
  StatsReport report;
  try {
    for (const auto& row : table.rows) {
      AttributeStats s;
      s.meta_attribute = row[c_meta];
      s.config.device_type = parse_device_type(row[c_type]);
      s.config.os = row[c_os];
      s.config.agent = row[c_agent];
      s.config.channel = parse_channel(row[c_channel]);
      s.reported = row[c_reported] == "1" || row[c_reported] == "true";
      s.cardinality = std::stoull(row[c_s]);
      s.entropy_bits = std::stod(row[c_hbits]);
      s.normalized_entropy = std::stod(row[c_h]);
      s.n_observations = std::stoull(row[c_n]);
      if (s.reported) ++report.reported_count[s.config];
      else report.reported_count.try_emplace(s.config, 0);
      report.rows.push_back(std::move(s));
    }
  } catch (const std::logic_error& e) {
    fail(ErrorCode::kMalformed, std::string("stats CSV: ") + e.what());
  }
  return report;
}

}  // namespace adfp
