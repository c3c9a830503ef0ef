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

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adfp/csv.hpp"
#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/sample.hpp"
#include "adfp/stats.hpp"

namespace adfp {

// Whether N_f counts distinct fingerprint groups or their samples.
enum class MetricWeighting { kGroups, kSamples };

struct VulnerabilityReport {
  DeviceConfig config;
  std::uint64_t n_f = 0;
  std::uint64_t n_tf = 0;
  std::uint64_t n_mf = 0;
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double tv = 0.0;
  double mv = 0.0;
  double accuracy = 0.0;
  std::uint64_t n_samples = 0;
};

// TV = N_tf / N_f, MV = N_mf / N_f, A = (TP + TN) / N_f over the groups of
// a single device configuration.
inline VulnerabilityReport vulnerability(std::span<const FingerprintGroup> groups,
                                         MetricWeighting weighting = MetricWeighting::kGroups) {
  if (groups.empty()) fail(ErrorCode::kEmptyInput, "vulnerability of an empty group list");
  VulnerabilityReport r;
  r.config = groups.front().config;
  for (const auto& g : groups) {
    if (g.config != r.config) {
      fail(ErrorCode::kInvalidArgument, "vulnerability groups span several configurations");
    }
    if (!g.measured) {
      fail(ErrorCode::kInvalidArgument,
           "group " + g.fingerprint.digest + " has no measured uniqueness");
    }
    const std::uint64_t w = weighting == MetricWeighting::kGroups ? 1 : g.n_samples;
    const bool truth = g.ground_truth == 1;
    const bool measured = *g.measured == 1;
    r.n_f += w;
    if (truth) r.n_tf += w;
    if (measured) r.n_mf += w;
    if (truth && measured) r.tp += w;
    if (!truth && !measured) r.tn += w;
    if (!truth && measured) r.fp += w;
    if (truth && !measured) r.fn += w;
    r.n_samples += g.n_samples;
  }
  if (r.n_f == 0) fail(ErrorCode::kEmptyInput, "vulnerability over zero-weight groups");
  const double n = static_cast<double>(r.n_f);
  r.tv = static_cast<double>(r.n_tf) / n;
  r.mv = static_cast<double>(r.n_mf) / n;
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  return r;
}

inline std::map<DeviceConfig, VulnerabilityReport> vulnerability_by_config(
    const std::vector<FingerprintGroup>& groups,
    MetricWeighting weighting = MetricWeighting::kGroups) {
  std::map<DeviceConfig, std::vector<FingerprintGroup>> by_config;
  for (const auto& g : groups) by_config[g.config].push_back(g);
  std::map<DeviceConfig, VulnerabilityReport> out;
  for (const auto& [config, list] : by_config) out[config] = vulnerability(list, weighting);
  return out;
}

// Configuration pattern; "*" in any field matches everything.
struct ConfigPattern {
  std::string device_type = "*";
  std::string os = "*";
  std::string agent = "*";
  std::string channel = "*";

  static ConfigPattern exact(const DeviceConfig& c) {
    return {std::string(to_string(c.device_type)), c.os, c.agent,
            std::string(to_string(c.channel))};
  }

  bool matches(const DeviceConfig& c) const {
    auto field = [](const std::string& p, std::string_view v) { return p == "*" || p == v; };
    return field(device_type, to_string(c.device_type)) && field(os, c.os) &&
           field(agent, c.agent) && field(channel, to_string(c.channel));
  }

  bool is_exact() const {
    return device_type != "*" && os != "*" && agent != "*" && channel != "*";
  }

  DeviceConfig to_config() const {
    DeviceConfig c;
    c.device_type = parse_device_type(device_type);
    c.os = os;
    c.agent = agent;
    c.channel = parse_channel(channel);
    return c;
  }

  std::string key() const { return device_type + "/" + os + "/" + agent + "/" + channel; }
};

struct ShareRow {
  ConfigPattern pattern;
  double share = 0.0;
};

// Shares over a universe (the pattern's device type: desktop or mobile).
struct MarketShareTable {
  std::vector<ShareRow> rows;

  void validate() const {
    std::map<std::string, double> per_universe;
    for (const auto& r : rows) {
      if (!(r.share >= 0.0 && r.share <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "share outside [0, 1] for " + r.pattern.key());
      }
      per_universe[r.pattern.device_type] += r.share;
    }
    for (const auto& [universe, total] : per_universe) {
      if (total > 1.0 + 1e-9) {
        fail(ErrorCode::kInvalidArgument,
             "shares for universe " + universe + " sum to " + std::to_string(total));
      }
    }
  }
};

// Sum over share rows of share x MV of the one report the row matches.
// Rows matching no report contribute nothing ("at least" semantics).
inline double extrapolate(const std::map<DeviceConfig, double>& mv_by_config,
                          const MarketShareTable& shares) {
  shares.validate();
  for (const auto& [config, mv] : mv_by_config) {
    int hits = 0;
    for (const auto& row : shares.rows) hits += row.pattern.matches(config) ? 1 : 0;
    if (hits > 1) {
      fail(ErrorCode::kOverlappingPattern,
           "configuration " + config.key() + " matches several share rows");
    }
  }
  double total = 0.0;
  for (const auto& row : shares.rows) {
    const double* mv = nullptr;
    int hits = 0;
    for (const auto& [config, value] : mv_by_config) {
      if (row.pattern.matches(config)) {
        mv = &value;
        ++hits;
      }
    }
    if (hits > 1) {
      fail(ErrorCode::kOverlappingPattern,
           "share row " + row.pattern.key() + " matches several configurations");
    }
    if (mv != nullptr) total += row.share * *mv;
  }
  return total;
}

struct MetricDeltas {
  // Percent change relative to the baseline; nullopt when the baseline is 0.
  std::optional<double> tv;
  std::optional<double> mv;
  std::optional<double> accuracy;
};

inline std::optional<double> percent_change(double before, double after) {
  if (before == 0.0) return std::nullopt;
  return (after - before) / before * 100.0;
}

inline MetricDeltas compare_reports(const VulnerabilityReport& before,
                                    const VulnerabilityReport& after) {
  if (before.config != after.config) {
    fail(ErrorCode::kInvalidArgument, "comparing reports of different configurations: " +
                                          before.config.key() + " vs " + after.config.key());
  }
  return {percent_change(before.tv, after.tv), percent_change(before.mv, after.mv),
          percent_change(before.accuracy, after.accuracy)};
}

inline constexpr std::string_view kUndefinedDelta = "NA";

// Two decimals, or the undefined marker.
inline std::string format_delta(const std::optional<double>& d) {
  if (!d) return std::string(kUndefinedDelta);
  const double rounded = std::round(*d * 100.0) / 100.0;
  return format_fixed(rounded == 0.0 ? 0.0 : rounded, 2);
}

inline void write_reports_csv(std::ostream& out,
                              const std::map<DeviceConfig, VulnerabilityReport>& reports) {
  csv::write_row(out, {"device_type", "os", "agent", "channel", "N_f", "N_tf", "N_mf", "TV",
                       "MV", "A", "n_samples"});
  for (const auto& [config, r] : reports) {
    csv::write_row(out, {std::string(to_string(config.device_type)), config.os, config.agent,
                         std::string(to_string(config.channel)), std::to_string(r.n_f),
                         std::to_string(r.n_tf), std::to_string(r.n_mf),
                         format_fixed(r.tv, 6), format_fixed(r.mv, 6),
                         format_fixed(r.accuracy, 6), std::to_string(r.n_samples)});
  }
}

inline std::map<DeviceConfig, VulnerabilityReport> read_reports_csv(std::istream& in) {
  const auto t = csv::read(in);
  std::map<DeviceConfig, VulnerabilityReport> out;
  try {
    for (const auto& row : t.rows) {
      VulnerabilityReport r;
      r.config = ConfigPattern{row[t.column("device_type")], row[t.column("os")],
                               row[t.column("agent")], row[t.column("channel")]}
                     .to_config();
      r.n_f = std::stoull(row[t.column("N_f")]);
      r.n_tf = std::stoull(row[t.column("N_tf")]);
      r.n_mf = std::stoull(row[t.column("N_mf")]);
      r.tv = std::stod(row[t.column("TV")]);
      r.mv = std::stod(row[t.column("MV")]);
      r.accuracy = std::stod(row[t.column("A")]);
      r.n_samples = std::stoull(row[t.column("n_samples")]);
      out[r.config] = r;
    }
  } catch (const std::logic_error& e) {
    fail(ErrorCode::kMalformed, std::string("report CSV: ") + e.what());
  }
  return out;
}

inline MarketShareTable read_shares_csv(std::istream& in) {
  const auto t = csv::read(in);
  MarketShareTable table;
  try {
    for (const auto& row : t.rows) {
      table.rows.push_back({{row[t.column("device_type")], row[t.column("os")],
                             row[t.column("agent")], row[t.column("channel")]},
                            std::stod(row[t.column("share")])});
    }
  } catch (const std::logic_error& e) {
    fail(ErrorCode::kMalformed, std::string("share CSV: ") + e.what());
  }
  table.validate();
  return table;
}

}  // namespace adfp
