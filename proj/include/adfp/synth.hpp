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
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/metrics.hpp"
#include "adfp/registry.hpp"
#include "adfp/rng.hpp"
#include "adfp/sample.hpp"
#include "json.hpp"

namespace adfp {

namespace internal {

// Normalized entropy of (q, (1-q)/(M-1), ..., (1-q)/(M-1)).
inline double dominant_family_entropy(double q, std::size_t m) {
  const auto xlogx = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
  const double rest = (1.0 - q) / static_cast<double>(m - 1);
  const double h = -xlogx(q) - static_cast<double>(m - 1) * xlogx(rest);
  return h / std::log2(static_cast<double>(m));
}

}  // namespace internal

// Probability vector of length `support` whose normalized entropy equals
// `target_h`: one dominant value with mass q, the rest sharing 1 - q. q is
// found by bisection on [1/M, 1], where the entropy decreases from 1 to 0.
inline std::vector<double> solve_distribution(std::size_t support, double target_h) {
  if (support == 0) fail(ErrorCode::kInvalidArgument, "support size must be >= 1");
  if (!(target_h >= 0.0 && target_h <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "target normalized entropy outside [0, 1]");
  }
  if (support == 1) return {1.0};
  const double m = static_cast<double>(support);
  double q;
  if (target_h >= 1.0) {
    q = 1.0 / m;
  } else if (target_h <= 0.0) {
    q = 1.0;
  } else {
    double lo = 1.0 / m;  // h = 1
    double hi = 1.0;      // h = 0
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (internal::dominant_family_entropy(mid, support) > target_h) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    q = 0.5 * (lo + hi);
  }
  std::vector<double> p(support, (1.0 - q) / (m - 1.0));
  p[0] = q;
  return p;
}

struct DistParams {
  std::size_t support_size = 4;
  double target_h = 0.2;
  double report_prob = 1.0;
};

struct AttributeDistSpec {
  std::string meta_attribute;
  DistParams params;
  std::map<std::string, DistParams> overrides;  // by DeviceConfig::key()

  const DistParams& for_config(const DeviceConfig& c) const {
    auto it = overrides.find(c.key());
    return it == overrides.end() ? params : it->second;
  }
};

struct ImpressionSpec {
  enum class Kind { kGeometric, kFixed } kind = Kind::kGeometric;
  double mean = 3.0;        // geometric
  std::uint64_t count = 1;  // fixed
};

struct PopulationSpec {
  std::uint64_t n_devices = 1000;
  MarketShareTable config_shares;  // exact patterns only
  ImpressionSpec impressions;
  double ad_id_report_rate = 1.0;
  double loss_rate = 0.0;
  double dnt_rate = 0.0;
  double incomplete_rate = 0.0;
  std::uint64_t max_samples = 0;  // 0 = unlimited
  std::int64_t start_ts = 1'700'000'000;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_devices < 1) fail(ErrorCode::kInvalidArgument, "n_devices must be >= 1");
    if (config_shares.rows.empty()) {
      fail(ErrorCode::kInvalidArgument, "population needs at least one configuration");
    }
    double total = 0.0;
    for (const auto& row : config_shares.rows) {
      if (!row.pattern.is_exact()) {
        fail(ErrorCode::kInvalidArgument,
             "population configurations must be exact: " + row.pattern.key());
      }
      validate(row.pattern.to_config());
      if (row.share < 0.0) fail(ErrorCode::kInvalidArgument, "negative share");
      total += row.share;
    }
    if (total <= 0.0) fail(ErrorCode::kInvalidArgument, "configuration shares sum to 0");
    for (double p : {ad_id_report_rate, loss_rate, dnt_rate, incomplete_rate}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "probabilities must lie in [0, 1]");
      }
    }
    if (impressions.kind == ImpressionSpec::Kind::kGeometric && impressions.mean < 1.0) {
      fail(ErrorCode::kInvalidArgument, "mean impressions per device must be >= 1");
    }
  }

 private:
  static void validate(const DeviceConfig& c) { adfp::validate(c); }
};

// A full generator input: population shape plus per-meta distributions.
// Meta-attributes without an entry use `default_params`.
struct GeneratorSpec {
  PopulationSpec population;
  std::vector<AttributeDistSpec> dists;
  DistParams default_params;
};

namespace internal {

struct ConfigPlan {
  DeviceConfig config;
  double cumulative = 0.0;
  // Per meta-attribute (registry meta order): reported flag and the value
  // distribution as a cumulative vector.
  std::vector<bool> reported;
  std::vector<double> dominant;   // q
  std::vector<std::size_t> support;
};

}  // namespace internal

// Deterministic population sample stream. Devices are generated in index
// order, each from its own seeded stream; every device fixes its attribute
// values once and emits its impressions in order.
inline std::vector<Sample> generate(const GeneratorSpec& spec, const AttributeRegistry& reg) {
  const auto& pop = spec.population;
  pop.validate();
  for (const auto& d : spec.dists) {
    if (reg.find_meta(d.meta_attribute) == nullptr) {
      fail(ErrorCode::kUnknownMeta, "distribution for unknown meta-attribute: " +
                                        d.meta_attribute);
    }
  }
  const auto& metas = reg.meta_groups();
  std::vector<const AttributeDistSpec*> dist_of(metas.size(), nullptr);
  for (std::size_t m = 0; m < metas.size(); ++m) {
    for (const auto& d : spec.dists) {
      if (d.meta_attribute == metas[m].name) dist_of[m] = &d;
    }
  }

  double total_share = 0.0;
  for (const auto& row : pop.config_shares.rows) total_share += row.share;
  std::vector<internal::ConfigPlan> plans;
  double cumulative = 0.0;
  for (std::size_t c = 0; c < pop.config_shares.rows.size(); ++c) {
    const auto& row = pop.config_shares.rows[c];
    internal::ConfigPlan plan;
    plan.config = row.pattern.to_config();
    cumulative += row.share / total_share;
    plan.cumulative = cumulative;
    Rng report_rng(derive_seed(pop.seed, 0xC0F1'0000ULL + c));
    for (std::size_t m = 0; m < metas.size(); ++m) {
      const DistParams& p = dist_of[m] ? dist_of[m]->for_config(plan.config)
                                       : spec.default_params;
      if (p.support_size < 1 || !(p.target_h >= 0.0 && p.target_h <= 1.0) ||
          !(p.report_prob >= 0.0 && p.report_prob <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "invalid distribution for " + metas[m].name);
      }
      plan.reported.push_back(report_rng.bernoulli(p.report_prob));
      plan.dominant.push_back(solve_distribution(p.support_size, p.target_h)[0]);
      plan.support.push_back(p.support_size);
    }
    plans.push_back(std::move(plan));
  }
  plans.back().cumulative = 1.0;

  std::vector<Sample> out;
  for (std::uint64_t device = 0; device < pop.n_devices; ++device) {
    Rng rng(derive_seed(pop.seed, device));
    const double u = rng.uniform();
    std::size_t c = 0;
    while (c + 1 < plans.size() && u >= plans[c].cumulative) ++c;
    const auto& plan = plans[c];
    const Channel channel = plan.config.channel;

    AttributeVector attrs;
    for (std::size_t m = 0; m < metas.size(); ++m) {
      std::optional<std::string> value;
      const std::size_t support = plan.support[m];
      std::uint64_t index = 0;
      if (support > 1 && !rng.bernoulli(plan.dominant[m])) {
        index = 1 + rng.below(support - 1);
      }
      if (plan.reported[m]) value = "v" + std::to_string(index);
      for (const auto& member : metas[m].members) {
        if (reg.find(member)->in_channel(channel)) attrs.set(member, value);
      }
    }
    char ad_buf[40];
    std::snprintf(ad_buf, sizeof ad_buf, "%016llx-%04llx",
                  static_cast<unsigned long long>(rng.next()),
                  static_cast<unsigned long long>(device & 0xffff));
    std::optional<std::string> ad_id;
    if (rng.bernoulli(pop.ad_id_report_rate)) ad_id = ad_buf;
    const bool dnt = rng.bernoulli(pop.dnt_rate);
    const std::uint64_t n_impressions =
        pop.impressions.kind == ImpressionSpec::Kind::kFixed
            ? pop.impressions.count
            : rng.geometric(pop.impressions.mean);
    for (std::uint64_t k = 0; k < n_impressions; ++k) {
      if (rng.bernoulli(pop.loss_rate)) continue;
      Sample s;
      s.sample_id = "d" + std::to_string(device) + "-i" + std::to_string(k);
      s.timestamp = pop.start_ts + static_cast<std::int64_t>(device % 86400) +
                    static_cast<std::int64_t>(k) * 3600;
      s.ad_id = ad_id;
      s.config = plan.config;
      s.attributes = attrs;
      s.dnt = dnt;
      if (rng.bernoulli(pop.incomplete_rate) && !s.attributes.values.empty()) {
        auto it = s.attributes.values.begin();
        std::advance(it, static_cast<long>(rng.below(s.attributes.values.size())));
        s.attributes.values.erase(it);
        s.complete = false;
      }
      out.push_back(std::move(s));
      if (pop.max_samples != 0 && out.size() >= pop.max_samples) return out;
    }
  }
  return out;
}

struct OracleLabel {
  int ground_truth = 0;
  std::size_t n_samples = 0;
  std::set<std::string> ad_ids;
};

using OracleKey = std::pair<DeviceConfig, std::string>;  // (config, digest)

// Brute-force uniqueness labels keyed by (configuration, digest). Grouping
// compares full attribute maps (non-missing entries only) rather than
// canonical strings or digests; the digest is attached afterwards so the
// result can be joined with a fingerprint dataset. Singletons are kept.
inline std::map<OracleKey, OracleLabel> oracle_uniqueness(const std::vector<Sample>& samples,
                                                          const AttributeRegistry& reg) {
  using Present = std::map<std::string, std::string>;
  std::map<std::pair<DeviceConfig, Present>, OracleLabel> by_vector;
  std::map<std::pair<DeviceConfig, Present>, const Sample*> witness;
  for (const auto& s : samples) {
    Present present;
    for (const auto& [name, value] : s.attributes.values) {
      if (value) present.emplace(name, *value);
    }
    auto key = std::make_pair(s.config, std::move(present));
    auto& label = by_vector[key];
    ++label.n_samples;
    if (s.ad_id) label.ad_ids.insert(*s.ad_id);
    witness.emplace(std::move(key), &s);
  }
  std::map<OracleKey, OracleLabel> out;
  for (auto& [key, label] : by_vector) {
    label.ground_truth = label.ad_ids.size() == 1 ? 1 : 0;
    const Sample* w = witness.at(key);
    out.emplace(OracleKey{key.first, make_fingerprint(w->attributes, reg, w->config.channel).digest},
                std::move(label));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spec files.

inline DistParams dist_params_from_json(const nlohmann::json& j, const DistParams& base) {
  DistParams p = base;
  p.support_size = j.value("support_size", p.support_size);
  p.target_h = j.value("target_h", p.target_h);
  p.report_prob = j.value("report_prob", p.report_prob);
  return p;
}

inline nlohmann::ordered_json dist_params_to_json(const DistParams& p) {
  nlohmann::ordered_json j;
  j["support_size"] = p.support_size;
  j["target_h"] = p.target_h;
  j["report_prob"] = p.report_prob;
  return j;
}

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec spec;
  try {
    const auto& pj = j.at("population");
    auto& pop = spec.population;
    pop.n_devices = pj.at("n_devices").get<std::uint64_t>();
    for (const auto& row : pj.at("configs")) {
      pop.config_shares.rows.push_back(
          {{row.at("device_type").get<std::string>(), row.at("os").get<std::string>(),
            row.at("agent").get<std::string>(), row.at("channel").get<std::string>()},
           row.at("share").get<double>()});
    }
    if (pj.contains("impressions")) {
      const auto& ij = pj.at("impressions");
      const auto kind = ij.value("kind", std::string("geometric"));
      if (kind == "geometric") {
        pop.impressions.kind = ImpressionSpec::Kind::kGeometric;
        pop.impressions.mean = ij.at("mean").get<double>();
      } else if (kind == "fixed") {
        pop.impressions.kind = ImpressionSpec::Kind::kFixed;
        pop.impressions.count = ij.at("count").get<std::uint64_t>();
      } else {
        fail(ErrorCode::kMalformed, "unknown impressions kind: " + kind);
      }
    }
    pop.ad_id_report_rate = pj.value("ad_id_report_rate", pop.ad_id_report_rate);
    pop.loss_rate = pj.value("loss_rate", pop.loss_rate);
    pop.dnt_rate = pj.value("dnt_rate", pop.dnt_rate);
    pop.incomplete_rate = pj.value("incomplete_rate", pop.incomplete_rate);
    pop.max_samples = pj.value("max_samples", pop.max_samples);
    pop.start_ts = pj.value("start_ts", pop.start_ts);
    pop.seed = pj.value("seed", pop.seed);
    if (j.contains("default")) {
      spec.default_params = dist_params_from_json(j.at("default"), spec.default_params);
    }
    if (j.contains("attributes")) {
      for (const auto& aj : j.at("attributes")) {
        AttributeDistSpec d;
        d.meta_attribute = aj.at("meta").get<std::string>();
        d.params = dist_params_from_json(aj, spec.default_params);
        if (aj.contains("overrides")) {
          for (const auto& [key, oj] : aj.at("overrides").items()) {
            d.overrides[key] = dist_params_from_json(oj, d.params);
          }
        }
        spec.dists.push_back(std::move(d));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("generator spec: ") + e.what());
  }
  spec.population.validate();
  return spec;
}

inline nlohmann::ordered_json generator_spec_to_json(const GeneratorSpec& spec) {
  const auto& pop = spec.population;
  nlohmann::ordered_json j;
  auto& pj = j["population"];
  pj["n_devices"] = pop.n_devices;
  pj["configs"] = nlohmann::ordered_json::array();
  for (const auto& row : pop.config_shares.rows) {
    nlohmann::ordered_json r;
    r["device_type"] = row.pattern.device_type;
    r["os"] = row.pattern.os;
    r["agent"] = row.pattern.agent;
    r["channel"] = row.pattern.channel;
    r["share"] = row.share;
    pj["configs"].push_back(r);
  }
  if (pop.impressions.kind == ImpressionSpec::Kind::kGeometric) {
    pj["impressions"] = {{"kind", "geometric"}, {"mean", pop.impressions.mean}};
  } else {
    pj["impressions"] = {{"kind", "fixed"}, {"count", pop.impressions.count}};
  }
  pj["ad_id_report_rate"] = pop.ad_id_report_rate;
  pj["loss_rate"] = pop.loss_rate;
  pj["dnt_rate"] = pop.dnt_rate;
  pj["incomplete_rate"] = pop.incomplete_rate;
  pj["max_samples"] = pop.max_samples;
  pj["start_ts"] = pop.start_ts;
  pj["seed"] = pop.seed;
  j["default"] = dist_params_to_json(spec.default_params);
  j["attributes"] = nlohmann::ordered_json::array();
  for (const auto& d : spec.dists) {
    auto aj = dist_params_to_json(d.params);
    aj["meta"] = d.meta_attribute;
    if (!d.overrides.empty()) {
      for (const auto& [key, p] : d.overrides) aj["overrides"][key] = dist_params_to_json(p);
    }
    j["attributes"].push_back(aj);
  }
  return j;
}

inline GeneratorSpec load_generator_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open generator spec: " + path);
  try {
    return generator_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformed, "generator spec " + path + ": " + e.what());
  }
}

// The default desk-scale benchmark: four web configurations, 50,000
// samples. Canvas and Fonts take one dominant value with probability ~0.6
// and an almost surely device-unique value otherwise, so uniqueness is
// carried by those two; the remaining metas span a few hundred common
// combinations on which dominant-value devices collide.
inline GeneratorSpec benchmark_spec(std::uint64_t seed = 2024) {
  GeneratorSpec spec;
  auto& pop = spec.population;
  pop.n_devices = 40'000;
  pop.max_samples = 50'000;
  pop.config_shares.rows = {
      {{"desktop", "Windows", "Chrome", "web"}, 0.40},
      {{"desktop", "macOS", "Safari", "web"}, 0.20},
      {{"mobile", "Android", "Chrome", "web"}, 0.30},
      {{"desktop", "Linux", "Firefox", "web"}, 0.10},
  };
  pop.impressions = {ImpressionSpec::Kind::kGeometric, 3.0, 1};
  pop.ad_id_report_rate = 0.9;
  pop.loss_rate = 0.19;
  pop.dnt_rate = 0.02;
  pop.incomplete_rate = 0.03;
  pop.seed = seed;
  spec.default_params = {3, 0.10, 1.0};
  auto dist = [](std::string meta, std::size_t support, double h) {
    AttributeDistSpec d;
    d.meta_attribute = std::move(meta);
    d.params = {support, h, 1.0};
    return d;
  };
  spec.dists = {
      dist("Canvas", 20'000, 0.468),
      dist("Fonts", 20'000, 0.468),
      dist("UserAgent", 12, 0.6),
      dist("Time zone offset", 8, 0.6),
      dist("available height", 8, 0.5),
      dist("Languages", 5, 0.5),
  };
  // Safari-like configuration: a block of attributes is never reported.
  const std::string safari = "desktop/macOS/Safari/web";
  for (auto meta : {"Battery status: charging", "Bluetooth availability", "Device memory",
                    "User Permissions state", "Audio cxt: max channel count"}) {
    AttributeDistSpec d = dist(meta, 3, 0.10);
    d.overrides[safari] = {3, 0.10, 0.0};
    spec.dists.push_back(std::move(d));
  }
  return spec;
}

}  // namespace adfp
