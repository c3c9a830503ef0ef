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

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adfp/error.hpp"
#include "adfp/registry.hpp"
#include "json.hpp"

namespace adfp {

enum class DeviceType { kMobile, kDesktop };

inline std::string_view to_string(DeviceType t) {
  return t == DeviceType::kMobile ? "mobile" : "desktop";
}

inline DeviceType parse_device_type(std::string_view s) {
  if (s == "mobile") return DeviceType::kMobile;
  if (s == "desktop") return DeviceType::kDesktop;
  fail(ErrorCode::kMalformed, "unknown device type: " + std::string(s));
}

inline constexpr std::string_view kWebViewAgent = "webview";

struct DeviceConfig {
  DeviceType device_type = DeviceType::kDesktop;
  std::string os;
  std::string agent;
  Channel channel = Channel::kWeb;

  auto operator<=>(const DeviceConfig&) const = default;
  bool operator==(const DeviceConfig&) const = default;

  // "desktop/Windows/Chrome/web"
  std::string key() const {
    return std::string(to_string(device_type)) + "/" + os + "/" + agent + "/" +
           std::string(to_string(channel));
  }

  bool valid() const {
    if (os.empty() || agent.empty()) return false;
    if (channel != Channel::kApp) return true;
    return device_type == DeviceType::kMobile && (os == "Android" || os == "iOS") &&
           agent == kWebViewAgent;
  }
};

inline void validate(const DeviceConfig& config) {
  if (!config.valid()) {
    fail(ErrorCode::kMalformed, "invalid device configuration: " + config.key());
  }
}

// Token used for a missing value in serialized fingerprints.
inline constexpr std::string_view kMissingToken = "\xE2\x88\x85";  // U+2205

// Attribute name -> value. A present key mapped to nullopt is an explicit
// missing marker; an absent key reads as missing too, but only explicit
// markers count towards sample completeness.
struct AttributeVector {
  std::map<std::string, std::optional<std::string>, std::less<>> values;

  std::optional<std::string> get(std::string_view name) const {
    auto it = values.find(name);
    return it == values.end() ? std::nullopt : it->second;
  }

  bool has_key(std::string_view name) const { return values.find(name) != values.end(); }

  void set(std::string name, std::optional<std::string> value) {
    values.insert_or_assign(std::move(name), std::move(value));
  }

  bool operator==(const AttributeVector&) const = default;
};

struct Sample {
  std::string sample_id;
  std::int64_t timestamp = 0;  // UTC seconds
  std::optional<std::string> ad_id;
  DeviceConfig config;
  AttributeVector attributes;
  bool dnt = false;
  bool complete = true;
};

// True when every attribute scoped to the sample's channel is present as a
// key (explicit missing markers included).
inline bool covers_scope(const AttributeVector& attrs, const AttributeRegistry& reg,
                         Channel channel) {
  for (const auto& s : reg.specs()) {
    if (s.in_channel(channel) && !attrs.has_key(s.name)) return false;
  }
  return true;
}

inline nlohmann::ordered_json config_to_json(const DeviceConfig& c) {
  nlohmann::ordered_json j;
  j["device_type"] = to_string(c.device_type);
  j["os"] = c.os;
  j["agent"] = c.agent;
  j["channel"] = to_string(c.channel);
  return j;
}

inline DeviceConfig config_from_json(const nlohmann::json& j) {
  DeviceConfig c;
  c.device_type = parse_device_type(j.at("device_type").get<std::string>());
  c.os = j.at("os").get<std::string>();
  c.agent = j.at("agent").get<std::string>();
  c.channel = parse_channel(j.at("channel").get<std::string>());
  return c;
}

// Attributes are written in registry order, unknown keys after them in
// lexical order, so a serialized line is a pure function of the sample.
inline nlohmann::ordered_json attributes_to_json(const AttributeVector& attrs,
                                                 const AttributeRegistry& reg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : reg.specs()) {
    auto it = attrs.values.find(s.name);
    if (it == attrs.values.end()) continue;
    j[s.name] = it->second ? nlohmann::ordered_json(*it->second)
                           : nlohmann::ordered_json(nullptr);
  }
  for (const auto& [name, value] : attrs.values) {
    if (reg.find(name) != nullptr) continue;
    j[name] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
  }
  return j;
}

inline AttributeVector attributes_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kMalformed, "attributes must be an object");
  AttributeVector attrs;
  for (const auto& [name, value] : j.items()) {
    if (value.is_null()) {
      attrs.set(name, std::nullopt);
    } else if (value.is_string()) {
      attrs.set(name, value.get<std::string>());
    } else {
      fail(ErrorCode::kMalformed, "attribute " + name + " must be a string or null");
    }
  }
  return attrs;
}

inline nlohmann::ordered_json sample_to_json(const Sample& s, const AttributeRegistry& reg) {
  nlohmann::ordered_json j;
  j["sample_id"] = s.sample_id;
  j["ts"] = s.timestamp;
  j["ad_id"] = s.ad_id ? nlohmann::ordered_json(*s.ad_id) : nlohmann::ordered_json(nullptr);
  j["device_type"] = to_string(s.config.device_type);
  j["os"] = s.config.os;
  j["agent"] = s.config.agent;
  j["channel"] = to_string(s.config.channel);
  j["dnt"] = s.dnt;
  j["attributes"] = attributes_to_json(s.attributes, reg);
  return j;
}

inline Sample sample_from_json(const nlohmann::json& j, const AttributeRegistry& reg) {
  Sample s;
  try {
    s.sample_id = j.at("sample_id").get<std::string>();
    s.timestamp = j.at("ts").get<std::int64_t>();
    if (j.contains("ad_id") && !j.at("ad_id").is_null()) {
      s.ad_id = j.at("ad_id").get<std::string>();
    }
    s.config = config_from_json(j);
    s.dnt = j.value("dnt", false);
    s.attributes = attributes_from_json(j.at("attributes"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("sample: ") + e.what());
  }
  s.complete = covers_scope(s.attributes, reg, s.config.channel);
  return s;
}

inline void write_samples_jsonl(std::ostream& out, const std::vector<Sample>& samples,
                                const AttributeRegistry& reg) {
  for (const auto& s : samples) out << sample_to_json(s, reg).dump() << '\n';
}

inline std::vector<Sample> read_samples_jsonl(std::istream& in, const AttributeRegistry& reg) {
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformed, "line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(sample_from_json(j, reg));
  }
  return out;
}

}  // namespace adfp
