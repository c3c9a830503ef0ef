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

#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "adfp/error.hpp"
#include "adfp/registry.hpp"
#include "json.hpp"

namespace adfp {

enum class BlockAction { kRemove, kFixConstant };

enum class PolicyProvenance { kShieldfTable, kThresholdSelector, kUserMask };

inline constexpr std::string_view kIdentityPolicyName = "identity";
inline constexpr std::string_view kDefaultConstantToken = "blocked";

struct BlockingPolicy {
  std::string name;
  std::set<std::string> blocked;  // meta-attribute names
  BlockAction action = BlockAction::kRemove;
  std::string constant{kDefaultConstantToken};
  PolicyProvenance provenance = PolicyProvenance::kUserMask;

  bool operator==(const BlockingPolicy&) const = default;
};

inline BlockingPolicy identity_policy() {
  BlockingPolicy p;
  p.name = std::string(kIdentityPolicyName);
  return p;
}

inline std::string_view to_string(BlockAction a) {
  return a == BlockAction::kRemove ? "remove" : "fix-constant";
}

inline std::string_view to_string(PolicyProvenance p) {
  switch (p) {
    case PolicyProvenance::kShieldfTable: return "shieldf-table";
    case PolicyProvenance::kThresholdSelector: return "threshold-selector";
    case PolicyProvenance::kUserMask: return "user-mask";
  }
  return "?";
}

// Checks the policy against a registry: every blocked name must be a
// meta-attribute, and only the identity policy may block nothing.
inline void validate_policy(const BlockingPolicy& policy, const AttributeRegistry& reg) {
  for (const auto& meta : policy.blocked) {
    if (reg.find_meta(meta) == nullptr) {
      fail(ErrorCode::kUnknownMeta, "policy " + policy.name +
                                        " blocks unknown meta-attribute: " + meta);
    }
  }
  if (policy.blocked.empty() && policy.name != kIdentityPolicyName) {
    fail(ErrorCode::kInvalidArgument,
         "policy " + policy.name + " blocks nothing; only \"identity\" may be empty");
  }
}

inline nlohmann::ordered_json policy_to_json(const BlockingPolicy& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["blocked"] = nlohmann::ordered_json::array();
  for (const auto& m : p.blocked) j["blocked"].push_back(m);
  j["action"] = to_string(p.action);
  if (p.action == BlockAction::kFixConstant) j["constant"] = p.constant;
  return j;
}

inline BlockingPolicy policy_from_json(const nlohmann::json& j) {
  BlockingPolicy p;
  try {
    p.name = j.at("name").get<std::string>();
    for (const auto& m : j.at("blocked")) p.blocked.insert(m.get<std::string>());
    const auto action = j.value("action", std::string("remove"));
    if (action == "remove") {
      p.action = BlockAction::kRemove;
    } else if (action == "fix-constant") {
      p.action = BlockAction::kFixConstant;
    } else {
      fail(ErrorCode::kMalformed, "unknown policy action: " + action);
    }
    p.constant = j.value("constant", std::string(kDefaultConstantToken));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("policy: ") + e.what());
  }
  p.provenance = PolicyProvenance::kUserMask;
  return p;
}

inline BlockingPolicy load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open policy file: " + path);
  try {
    return policy_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformed, "policy file " + path + ": " + e.what());
  }
}

}  // namespace adfp
