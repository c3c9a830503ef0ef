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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adfp/builtin_registry.hpp"
#include "adfp/error.hpp"
#include "json.hpp"

namespace adfp {

enum class Channel { kWeb, kApp };

enum class AttributeSource {
  kJsObject,
  kJsMethod,
  kJsApi,
  kAjaxApi,
  kAjaxMethod,
  kHttpHeader,
};

enum class AttributeScope { kBrowserOnly, kAppAndBrowser };

enum class ExclusionReason {
  kConstantValue,
  kUnstableOverTime,
  kUnreliable,
  kUnsupported,
  kCorrelatedValue,
  kSubsumed,
};

inline std::string_view to_string(Channel c) {
  return c == Channel::kWeb ? "web" : "app";
}

inline Channel parse_channel(std::string_view s) {
  if (s == "web") return Channel::kWeb;
  if (s == "app") return Channel::kApp;
  fail(ErrorCode::kMalformed, "unknown channel: " + std::string(s));
}

namespace internal {

template <typename Enum, std::size_t N>
struct EnumNames {
  std::array<std::pair<Enum, std::string_view>, N> entries;

  std::string_view name(Enum e) const {
    for (const auto& [value, text] : entries) {
      if (value == e) return text;
    }
    return "?";
  }

  Enum parse(std::string_view text, std::string_view what) const {
    for (const auto& [value, name] : entries) {
      if (name == text) return value;
    }
    fail(ErrorCode::kMalformed,
         "unknown " + std::string(what) + ": " + std::string(text));
  }
};

inline constexpr EnumNames<AttributeSource, 6> kSourceNames{{{
    {AttributeSource::kJsObject, "js-object"},
    {AttributeSource::kJsMethod, "js-method"},
    {AttributeSource::kJsApi, "js-api"},
    {AttributeSource::kAjaxApi, "ajax-api"},
    {AttributeSource::kAjaxMethod, "ajax-method"},
    {AttributeSource::kHttpHeader, "http-header"},
}}};

inline constexpr EnumNames<AttributeScope, 2> kScopeNames{{{
    {AttributeScope::kBrowserOnly, "browser-only"},
    {AttributeScope::kAppAndBrowser, "app-and-browser"},
}}};

inline constexpr EnumNames<ExclusionReason, 6> kReasonNames{{{
    {ExclusionReason::kConstantValue, "constant-value"},
    {ExclusionReason::kUnstableOverTime, "unstable-over-time"},
    {ExclusionReason::kUnreliable, "unreliable"},
    {ExclusionReason::kUnsupported, "unsupported"},
    {ExclusionReason::kCorrelatedValue, "correlated-value"},
    {ExclusionReason::kSubsumed, "subsumed"},
}}};

}  // namespace internal

inline std::string_view to_string(AttributeSource s) {
  return internal::kSourceNames.name(s);
}
inline std::string_view to_string(AttributeScope s) {
  return internal::kScopeNames.name(s);
}
inline std::string_view to_string(ExclusionReason r) {
  return internal::kReasonNames.name(r);
}

struct AttributeSpec {
  std::string name;
  AttributeSource source = AttributeSource::kJsObject;
  AttributeScope scope = AttributeScope::kBrowserOnly;
  // Meta-attribute this attribute is concatenated into.
  std::string meta_group;
  bool collected = false;
  std::optional<ExclusionReason> exclusion_reason;

  bool in_channel(Channel channel) const {
    return collected &&
           (channel == Channel::kWeb || scope == AttributeScope::kAppAndBrowser);
  }

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

// Ordered, immutable catalog of attributes. The spec order is the canonical
// serialization order for fingerprints; meta-attributes are ordered by the
// first appearance of a collected member.
class AttributeRegistry {
 public:
  struct MetaGroup {
    std::string name;
    std::vector<std::string> members;  // collected members, registry order
  };

  AttributeRegistry(std::string version, std::vector<AttributeSpec> specs)
      : version_(std::move(version)), specs_(std::move(specs)) {
    validate_and_index();
  }

  const std::string& version() const { return version_; }
  const std::vector<AttributeSpec>& specs() const { return specs_; }
  const std::vector<MetaGroup>& meta_groups() const { return meta_groups_; }

  const AttributeSpec* find(std::string_view name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &specs_[it->second];
  }

  const MetaGroup* find_meta(std::string_view meta) const {
    auto it = meta_index_.find(meta);
    return it == meta_index_.end() ? nullptr : &meta_groups_[it->second];
  }

  // Position of an attribute in registry order; throws for unknown names.
  std::size_t index_of(std::string_view name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
      fail(ErrorCode::kUnknownAttribute, "unknown attribute: " + std::string(name));
    }
    return it->second;
  }

  // Name to registry position, ascending by name.
  const std::map<std::string, std::size_t, std::less<>>& name_index() const { return by_name_; }

  // Meta-group position of spec `i`; npos for non-collected specs.
  std::size_t meta_of_spec(std::size_t i) const { return spec_meta_[i]; }

  std::size_t collected_count() const {
    return static_cast<std::size_t>(std::count_if(
        specs_.begin(), specs_.end(), [](const auto& s) { return s.collected; }));
  }

  // Meta-attribute names that have at least one member in `channel`.
  std::vector<std::string> scoped_meta_groups(Channel channel) const {
    std::vector<std::string> out;
    for (const auto& group : meta_groups_) {
      const bool any = std::any_of(
          group.members.begin(), group.members.end(),
          [&](const std::string& m) { return find(m)->in_channel(channel); });
      if (any) out.push_back(group.name);
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : specs_) {
      arr.push_back({
          {"name", s.name},
          {"source", to_string(s.source)},
          {"scope", to_string(s.scope)},
          {"meta_group", s.meta_group},
          {"collected", s.collected},
          {"exclusion_reason", s.exclusion_reason
                                   ? nlohmann::json(to_string(*s.exclusion_reason))
                                   : nlohmann::json(nullptr)},
      });
    }
    return arr;
  }

  std::string serialize() const { return to_json().dump(2) + "\n"; }

 private:
  void validate_and_index() {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& s = specs_[i];
      if (s.name.empty()) fail(ErrorCode::kMalformed, "attribute with empty name");
      if (!by_name_.emplace(s.name, i).second) {
        fail(ErrorCode::kDuplicateName, "duplicate attribute name: " + s.name);
      }
      if (s.collected && s.exclusion_reason) {
        fail(ErrorCode::kMalformed,
             "collected attribute carries an exclusion reason: " + s.name);
      }
      if (!s.collected && !s.exclusion_reason) {
        fail(ErrorCode::kMalformed,
             "non-collected attribute lacks an exclusion reason: " + s.name);
      }
      if (s.meta_group.empty()) {
        fail(ErrorCode::kMalformed, "attribute without meta group: " + s.name);
      }
      spec_meta_.push_back(std::string::npos);
      if (!s.collected) continue;
      auto [it, inserted] = meta_index_.emplace(s.meta_group, meta_groups_.size());
      if (inserted) meta_groups_.push_back({s.meta_group, {}});
      meta_groups_[it->second].members.push_back(s.name);
      spec_meta_.back() = it->second;
    }
  }

  std::string version_;
  std::vector<AttributeSpec> specs_;
  std::vector<MetaGroup> meta_groups_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::map<std::string, std::size_t, std::less<>> meta_index_;
  std::vector<std::size_t> spec_meta_;
};

inline constexpr std::size_t kAdfCollectedCount = 66;
inline constexpr std::size_t kAdfAppCount = 35;

// Count invariants of the adf-v1 catalog.
inline void check_adf_counts(const AttributeRegistry& reg) {
  std::size_t collected = 0;
  std::size_t app = 0;
  for (const auto& s : reg.specs()) {
    if (!s.collected) continue;
    ++collected;
    if (s.scope == AttributeScope::kAppAndBrowser) ++app;
  }
  if (collected != kAdfCollectedCount || app != kAdfAppCount) {
    fail(ErrorCode::kCountInvariant,
         "registry " + reg.version() + " has " + std::to_string(collected) +
             " collected / " + std::to_string(app) + " app attributes, expected " +
             std::to_string(kAdfCollectedCount) + " / " + std::to_string(kAdfAppCount));
  }
}

inline AttributeRegistry builtin_registry() {
  std::vector<AttributeSpec> specs;
  specs.reserve(builtin::kAdfV1.size());
  for (const auto& row : builtin::kAdfV1) {
    AttributeSpec s;
    s.name = std::string(row.name);
    s.meta_group = std::string(row.meta_group);
    s.source = internal::kSourceNames.parse(row.source, "source");
    s.scope = row.app ? AttributeScope::kAppAndBrowser : AttributeScope::kBrowserOnly;
    s.collected = row.collected;
    if (!row.reason.empty()) {
      s.exclusion_reason = internal::kReasonNames.parse(row.reason, "exclusion reason");
    }
    specs.push_back(std::move(s));
  }
  AttributeRegistry reg(std::string(builtin::kAdfV1Tag), std::move(specs));
  check_adf_counts(reg);
  return reg;
}

// Parses the registry file format: either a bare JSON array of spec objects
// or {"version": ..., "specs": [...]}. A file declaring version "adf-v1" must
// satisfy the adf-v1 count invariants.
inline AttributeRegistry parse_registry(const nlohmann::json& doc,
                                        std::string default_version) {
  const nlohmann::json* arr = &doc;
  std::string version = std::move(default_version);
  if (doc.is_object()) {
    if (!doc.contains("specs")) fail(ErrorCode::kMalformed, "registry object lacks specs");
    arr = &doc.at("specs");
    if (doc.contains("version")) version = doc.at("version").get<std::string>();
  }
  if (!arr->is_array()) fail(ErrorCode::kMalformed, "registry must be a JSON array");
  std::vector<AttributeSpec> specs;
  try {
    for (const auto& item : *arr) {
      AttributeSpec s;
      s.name = item.at("name").get<std::string>();
      s.source = internal::kSourceNames.parse(item.at("source").get<std::string>(), "source");
      s.scope = internal::kScopeNames.parse(item.at("scope").get<std::string>(), "scope");
      s.meta_group = item.value("meta_group", s.name);
      s.collected = item.at("collected").get<bool>();
      if (item.contains("exclusion_reason") && !item.at("exclusion_reason").is_null()) {
        s.exclusion_reason = internal::kReasonNames.parse(
            item.at("exclusion_reason").get<std::string>(), "exclusion reason");
      }
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("registry entry: ") + e.what());
  }
  AttributeRegistry reg(version, std::move(specs));
  if (reg.version() == builtin::kAdfV1Tag) check_adf_counts(reg);
  return reg;
}

// Loads a registry from a built-in tag ("adf-v1") or a JSON file path.
inline AttributeRegistry load_registry(const std::string& path_or_tag) {
  if (path_or_tag == builtin::kAdfV1Tag) return builtin_registry();
  std::ifstream in(path_or_tag);
  if (!in) fail(ErrorCode::kIo, "cannot open registry file: " + path_or_tag);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, "registry file " + path_or_tag + ": " + e.what());
  }
  return parse_registry(doc, "file:" + std::filesystem::path(path_or_tag).filename().string());
}

// Collected attribute names for a channel, in registry order.
inline std::vector<std::string> scoped_attributes(const AttributeRegistry& reg,
                                                  Channel channel) {
  std::vector<std::string> out;
  for (const auto& s : reg.specs()) {
    if (s.in_channel(channel)) out.push_back(s.name);
  }
  return out;
}

}  // namespace adfp
