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

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <future>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "adfp/error.hpp"
#include "adfp/policy.hpp"
#include "adfp/registry.hpp"
#include "adfp/sample.hpp"
#include "json.hpp"

namespace adfp {

inline constexpr char kUnitSeparator = '\x1f';

// Appends `value` with the unit separator, the backslash, and a literal
// missing token escaped, so distinct vectors never serialize identically.
inline void append_escaped(std::string& out, std::string_view value) {
  if (value == kMissingToken) {
    out += "\\u2205";
    return;
  }
  while (!value.empty()) {
    const auto cut = value.find_first_of("\x1f\\");
    out.append(value.substr(0, cut));
    if (cut == std::string_view::npos) break;
    out += value[cut] == kUnitSeparator ? "\\u001f" : "\\\\";
    value.remove_prefix(cut + 1);
  }
}

// Registry-position view of a blocking policy.
struct BlockMask {
  std::vector<char> blocked;
  BlockAction action = BlockAction::kRemove;
  std::string constant;
};

inline BlockMask make_block_mask(const BlockingPolicy& policy, const AttributeRegistry& reg) {
  validate_policy(policy, reg);
  BlockMask mask;
  mask.blocked.assign(reg.specs().size(), 0);
  mask.action = policy.action;
  mask.constant = policy.constant;
  for (const auto& meta : policy.blocked) {
    for (const auto& member : reg.find_meta(meta)->members) mask.blocked[reg.index_of(member)] = 1;
  }
  return mask;
}

// "name=value" pairs over the channel's scoped attributes in registry order,
// joined by U+001F; missing values serialize as the missing token. With a
// mask, present values of blocked attributes are first removed or replaced
// by the constant, exactly as apply_blocking would.
inline std::string canonical_string(const AttributeVector& attrs, const AttributeRegistry& reg,
                                    Channel channel, const BlockMask* mask = nullptr) {
  const auto& specs = reg.specs();
  std::vector<const std::optional<std::string>*> slot(specs.size(), nullptr);
  // Both maps iterate in ascending name order.
  auto it = reg.name_index().begin();
  const auto end = reg.name_index().end();
  for (const auto& [name, value] : attrs.values) {
    while (it != end && it->first < name) ++it;
    if (it == end || it->first != name || !specs[it->second].in_channel(channel)) {
      fail(ErrorCode::kUnknownAttribute,
           "attribute not scoped to " + std::string(to_string(channel)) + ": " + name);
    }
    slot[it->second] = &value;
  }
  std::string out;
  out.reserve(attrs.values.size() * 24);
  bool first = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    if (!spec.in_channel(channel)) continue;
    if (!first) out += kUnitSeparator;
    first = false;
    out += spec.name;
    out += '=';
    const std::optional<std::string>* v = slot[i];
    if (v != nullptr && mask != nullptr && mask->blocked[i]) {
      if (mask->action == BlockAction::kRemove) {
        out += kMissingToken;
      } else {
        append_escaped(out, mask->constant);
      }
    } else if (v == nullptr || !*v) {
      out += kMissingToken;
    } else {
      append_escaped(out, **v);
    }
  }
  return out;
}

inline std::string to_hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(n * 2, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0xf];
  }
  return out;
}

// Lowercase hex MD5 of the bytes of `data`.
inline std::string md5_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_md5(), nullptr) != 1 ||
      len != 16) {
    fail(ErrorCode::kInternal, "MD5 digest computation failed");
  }
  return to_hex(digest.data(), len);
}

struct Fingerprint {
  std::string digest;  // 32 lowercase hex characters

  auto operator<=>(const Fingerprint&) const = default;
  bool operator==(const Fingerprint&) const = default;
};

inline Fingerprint make_fingerprint(const AttributeVector& attrs, const AttributeRegistry& reg,
                                    Channel channel) {
  return {md5_hex(canonical_string(attrs, reg, channel))};
}

// Keeps samples that carry an advertising ID, do not send do-not-track, and
// are complete. Order is preserved.
inline std::vector<Sample> filter_raw(const std::vector<Sample>& samples) {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.ad_id && !s.dnt && s.complete) out.push_back(s);
  }
  return out;
}

// Rewrites the members of every blocked meta-attribute. Only keys already in
// the vector are touched, so the result stays within the channel's scope.
inline AttributeVector apply_blocking(const AttributeVector& attrs,
                                      const BlockingPolicy& policy,
                                      const AttributeRegistry& reg) {
  AttributeVector out = attrs;
  for (const auto& meta : policy.blocked) {
    const auto* group = reg.find_meta(meta);
    if (group == nullptr) {
      fail(ErrorCode::kUnknownMeta, "policy blocks unknown meta-attribute: " + meta);
    }
    for (const auto& member : group->members) {
      auto it = out.values.find(member);
      if (it == out.values.end()) continue;
      if (policy.action == BlockAction::kRemove) {
        it->second = std::nullopt;
      } else {
        it->second = policy.constant;
      }
    }
  }
  return out;
}

struct FingerprintGroup {
  Fingerprint fingerprint;
  DeviceConfig config;
  std::vector<std::string> sample_ids;
  std::set<std::string> ad_ids;
  // Authoritative counts; sample_ids/ad_ids are empty for groups read back
  // from a fingerprint dataset file.
  std::size_t n_samples = 0;
  std::size_t n_ad_ids = 0;
  int ground_truth = 0;
  std::optional<int> measured;
  std::optional<double> score;
  AttributeVector representative;
};

struct FingerprintDataset {
  std::vector<FingerprintGroup> groups;
  // Distinct (fingerprint, config) keys seen exactly once, dropped above.
  std::size_t singletons = 0;
};

namespace internal {

using GroupKey = std::pair<std::string, DeviceConfig>;

struct PartialGroup {
  std::size_t first_index;
  FingerprintGroup group;
};

inline std::vector<PartialGroup> group_partition(const std::vector<Sample>& samples,
                                                 const std::vector<std::string>& digests,
                                                 std::size_t partition,
                                                 std::size_t n_partitions) {
  std::map<GroupKey, std::size_t> index;
  std::vector<PartialGroup> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& digest = digests[i];
    if (n_partitions > 1 &&
        static_cast<std::size_t>(std::stoul(digest.substr(0, 2), nullptr, 16)) %
                n_partitions != partition) {
      continue;
    }
    const auto& s = samples[i];
    auto [it, inserted] = index.emplace(GroupKey{digest, s.config}, out.size());
    if (inserted) {
      PartialGroup pg{i, {}};
      pg.group.fingerprint = {digest};
      pg.group.config = s.config;
      out.push_back(std::move(pg));
    }
    auto& g = out[it->second].group;
    g.sample_ids.push_back(s.sample_id);
    if (s.ad_id) g.ad_ids.insert(*s.ad_id);
  }
  return out;
}

}  // namespace internal

namespace internal {

inline FingerprintDataset assemble_dataset(const std::vector<Sample>& samples,
                                           const std::vector<std::string>& digests,
                                           const AttributeRegistry& reg, std::size_t partitions,
                                           const BlockingPolicy* policy) {
  if (partitions == 0) partitions = 1;
  std::vector<PartialGroup> merged;
  if (partitions == 1) {
    merged = group_partition(samples, digests, 0, 1);
  } else {
    std::vector<std::future<std::vector<PartialGroup>>> parts;
    for (std::size_t p = 0; p < partitions; ++p) {
      parts.push_back(std::async(std::launch::async, [&, p] {
        return group_partition(samples, digests, p, partitions);
      }));
    }
    for (auto& f : parts) {
      auto part = f.get();
      for (auto& pg : part) merged.push_back(std::move(pg));
    }
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
      return a.first_index < b.first_index;
    });
  }
  FingerprintDataset out;
  for (auto& pg : merged) {
    auto& g = pg.group;
    g.n_samples = g.sample_ids.size();
    g.n_ad_ids = g.ad_ids.size();
    if (g.n_samples < 2) {
      ++out.singletons;
      continue;
    }
    g.ground_truth = g.n_ad_ids == 1 ? 1 : 0;
    const auto& first = samples[pg.first_index].attributes;
    g.representative = policy ? apply_blocking(first, *policy, reg) : first;
    out.groups.push_back(std::move(g));
  }
  return out;
}

}  // namespace internal

// Groups samples by (fingerprint, device configuration), discards groups
// seen only once and labels ground-truth uniqueness: 1 iff every sample of
// the group carries the same advertising ID. Groups are ordered by their
// first sample. `partitions` > 1 groups digest-prefix partitions
// concurrently; the result does not depend on it. A policy yields the same
// dataset as grouping apply_blocking(samples, *policy, reg).
inline FingerprintDataset build_fingerprint_dataset(const std::vector<Sample>& samples,
                                                    const AttributeRegistry& reg,
                                                    std::size_t partitions = 1,
                                                    const BlockingPolicy* policy = nullptr) {
  std::optional<BlockMask> mask;
  if (policy) mask = make_block_mask(*policy, reg);
  std::vector<std::string> digests;
  digests.reserve(samples.size());
  for (const auto& s : samples) {
    digests.push_back(md5_hex(
        canonical_string(s.attributes, reg, s.config.channel, mask ? &*mask : nullptr)));
  }
  return internal::assemble_dataset(samples, digests, reg, partitions, policy);
}

// Sample set prepared for fingerprinting under many policies. Samples whose
// canonical strings coincide hold identical attribute vectors, so each
// distinct vector is serialized once per policy. References `samples` and
// `reg`, which must outlive it.
class FingerprintIndex {
 public:
  FingerprintIndex(const std::vector<Sample>& samples, const AttributeRegistry& reg)
      : samples_(samples), reg_(reg) {
    std::unordered_map<std::string, std::size_t> seen;
    unique_of_.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      std::string key = canonical_string(s.attributes, reg, s.config.channel);
      key += static_cast<char>(s.config.channel == Channel::kWeb ? 'w' : 'a');
      auto [it, inserted] = seen.emplace(std::move(key), first_.size());
      if (inserted) first_.push_back(i);
      unique_of_.push_back(it->second);
    }
  }

  std::size_t distinct_vectors() const { return first_.size(); }

  FingerprintDataset build(const BlockingPolicy* policy = nullptr,
                           std::size_t partitions = 1) const {
    std::optional<BlockMask> mask;
    if (policy) mask = make_block_mask(*policy, reg_);
    std::vector<std::string> unique_digests;
    unique_digests.reserve(first_.size());
    for (auto i : first_) {
      const auto& s = samples_[i];
      unique_digests.push_back(md5_hex(
          canonical_string(s.attributes, reg_, s.config.channel, mask ? &*mask : nullptr)));
    }
    std::vector<std::string> digests;
    digests.reserve(samples_.size());
    for (auto u : unique_of_) digests.push_back(unique_digests[u]);
    return internal::assemble_dataset(samples_, digests, reg_, partitions, policy);
  }

 private:
  const std::vector<Sample>& samples_;
  const AttributeRegistry& reg_;
  std::vector<std::size_t> first_;      // first sample of each distinct vector
  std::vector<std::size_t> unique_of_;  // distinct-vector id per sample
};

inline std::vector<Sample> apply_blocking(const std::vector<Sample>& samples,
                                          const BlockingPolicy& policy,
                                          const AttributeRegistry& reg) {
  validate_policy(policy, reg);
  std::vector<Sample> out = samples;
  for (auto& s : out) s.attributes = apply_blocking(s.attributes, policy, reg);
  return out;
}

inline nlohmann::ordered_json group_to_json(const FingerprintGroup& g,
                                            const AttributeRegistry& reg) {
  nlohmann::ordered_json j;
  j["digest"] = g.fingerprint.digest;
  j["config"] = config_to_json(g.config);
  j["n_samples"] = g.n_samples;
  j["n_ad_ids"] = g.n_ad_ids;
  j["gt"] = g.ground_truth;
  j["mv"] = g.measured ? nlohmann::ordered_json(*g.measured) : nlohmann::ordered_json(nullptr);
  j["attributes"] = attributes_to_json(g.representative, reg);
  return j;
}

inline FingerprintGroup group_from_json(const nlohmann::json& j) {
  FingerprintGroup g;
  try {
    g.fingerprint.digest = j.at("digest").get<std::string>();
    g.config = config_from_json(j.at("config"));
    g.n_samples = j.at("n_samples").get<std::size_t>();
    g.n_ad_ids = j.at("n_ad_ids").get<std::size_t>();
    g.ground_truth = j.at("gt").get<int>();
    if (j.contains("mv") && !j.at("mv").is_null()) g.measured = j.at("mv").get<int>();
    g.representative = attributes_from_json(j.at("attributes"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("fingerprint group: ") + e.what());
  }
  return g;
}

inline void write_groups_jsonl(std::ostream& out, const std::vector<FingerprintGroup>& groups,
                               const AttributeRegistry& reg) {
  for (const auto& g : groups) out << group_to_json(g, reg).dump() << '\n';
}

inline std::vector<FingerprintGroup> read_groups_jsonl(std::istream& in) {
  std::vector<FingerprintGroup> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(group_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kMalformed, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace adfp
