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
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/registry.hpp"
#include "adfp/stats.hpp"
#include "json.hpp"

namespace adfp {

// One row of raw meta-attribute values; nullopt = missing.
using RawRow = std::vector<std::optional<std::string>>;

// Raw meta values per group over `metas`, in group order.
inline std::vector<RawRow> raw_meta_rows(const std::vector<FingerprintGroup>& groups,
                                         const std::vector<std::string>& metas,
                                         const AttributeRegistry& reg) {
  std::vector<RawRow> rows;
  rows.reserve(groups.size());
  for (const auto& g : groups) {
    RawRow row;
    row.reserve(metas.size());
    for (const auto& m : metas) row.push_back(meta_value(g.representative, m, reg));
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class EncodingKind { kOneHot, kFrequency };

inline std::string_view to_string(EncodingKind k) {
  return k == EncodingKind::kOneHot ? "one-hot" : "frequency";
}

inline constexpr std::int32_t kMissingCode = -2;
inline constexpr std::int32_t kUnseenCode = -1;

// A row of value codes: index into the meta's value list, kUnseenCode, or
// kMissingCode.
using CodedRow = std::vector<std::int32_t>;

struct MetaEncoding {
  std::string meta;
  EncodingKind kind = EncodingKind::kOneHot;
  std::vector<std::string> values;  // sorted, deduplicated
  std::vector<double> frequency;    // parallel to values; sums to 1

  std::int32_t code(const std::optional<std::string>& v) const {
    if (!v) return kMissingCode;
    auto it = std::lower_bound(values.begin(), values.end(), *v);
    if (it == values.end() || *it != *v) return kUnseenCode;
    return static_cast<std::int32_t>(it - values.begin());
  }

  std::size_t width() const { return kind == EncodingKind::kOneHot ? values.size() : 1; }
};

struct EncoderState {
  std::size_t threshold = 32;
  std::vector<MetaEncoding> metas;

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& m : metas) w += m.width();
    return w;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& m : metas) {
      if (m.kind == EncodingKind::kFrequency) {
        out.push_back(m.meta + "#freq");
      } else {
        for (const auto& v : m.values) out.push_back(m.meta + "=" + v);
      }
    }
    return out;
  }

  CodedRow code(const RawRow& row) const {
    if (row.size() != metas.size()) {
      fail(ErrorCode::kInvalidArgument, "row width does not match the encoder");
    }
    CodedRow out(row.size());
    for (std::size_t m = 0; m < row.size(); ++m) out[m] = metas[m].code(row[m]);
    return out;
  }
};

// One-hot for observed cardinality <= threshold, frequency otherwise; every
// table comes from `rows` only.
inline EncoderState fit_encoder(const std::vector<RawRow>& rows,
                                const std::vector<std::string>& metas, std::size_t threshold) {
  if (rows.empty()) fail(ErrorCode::kEmptyInput, "encoder needs at least one row");
  EncoderState enc;
  enc.threshold = threshold;
  for (std::size_t m = 0; m < metas.size(); ++m) {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto& row : rows) {
      if (row.size() != metas.size()) {
        fail(ErrorCode::kInvalidArgument, "row width does not match the meta list");
      }
      if (row[m]) {
        ++counts[*row[m]];
        ++total;
      }
    }
    MetaEncoding e;
    e.meta = metas[m];
    e.kind = counts.size() <= threshold ? EncodingKind::kOneHot : EncodingKind::kFrequency;
    for (const auto& [v, c] : counts) {
      e.values.push_back(v);
      e.frequency.push_back(static_cast<double>(c) / static_cast<double>(total));
    }
    enc.metas.push_back(std::move(e));
  }
  return enc;
}

inline EncoderState fit_encoder(const std::vector<FingerprintGroup>& groups,
                                const AttributeRegistry& reg, Channel channel,
                                std::size_t threshold) {
  const auto metas = reg.scoped_meta_groups(channel);
  return fit_encoder(raw_meta_rows(groups, metas, reg), metas, threshold);
}

// Per-meta slot after imputation: the value code for one-hot metas, the
// relative frequency for frequency metas. NaN marks a slot left empty.
using SlotRow = std::vector<double>;

inline double slot_of(const MetaEncoding& e, std::int32_t code) {
  if (code == kMissingCode) return std::numeric_limits<double>::quiet_NaN();
  if (e.kind == EncodingKind::kOneHot) return static_cast<double>(code);
  return code >= 0 ? e.frequency[static_cast<std::size_t>(code)] : 0.0;
}

// Dense feature vector; empty and unseen slots encode as zeros.
inline void expand(const SlotRow& slots, const EncoderState& enc, std::vector<double>& out) {
  out.assign(enc.width(), 0.0);
  std::size_t offset = 0;
  for (std::size_t m = 0; m < enc.metas.size(); ++m) {
    const auto& e = enc.metas[m];
    const double s = slots[m];
    if (e.kind == EncodingKind::kOneHot) {
      if (!std::isnan(s) && s >= 0.0) out[offset + static_cast<std::size_t>(s)] = 1.0;
    } else if (!std::isnan(s)) {
      out[offset] = s;
    }
    offset += e.width();
  }
}

inline nlohmann::ordered_json encoder_to_json(const EncoderState& enc) {
  nlohmann::ordered_json j;
  j["threshold"] = enc.threshold;
  j["metas"] = nlohmann::ordered_json::array();
  for (const auto& e : enc.metas) {
    nlohmann::ordered_json m;
    m["meta"] = e.meta;
    m["kind"] = to_string(e.kind);
    m["values"] = e.values;
    m["frequency"] = e.frequency;
    j["metas"].push_back(std::move(m));
  }
  return j;
}

inline EncoderState encoder_from_json(const nlohmann::json& j) {
  EncoderState enc;
  enc.threshold = j.at("threshold").get<std::size_t>();
  for (const auto& m : j.at("metas")) {
    MetaEncoding e;
    e.meta = m.at("meta").get<std::string>();
    const auto kind = m.at("kind").get<std::string>();
    if (kind == "one-hot") {
      e.kind = EncodingKind::kOneHot;
    } else if (kind == "frequency") {
      e.kind = EncodingKind::kFrequency;
    } else {
      fail(ErrorCode::kMalformed, "unknown encoding kind: " + kind);
    }
    e.values = m.at("values").get<std::vector<std::string>>();
    e.frequency = m.at("frequency").get<std::vector<double>>();
    if (e.values.size() != e.frequency.size() ||
        !std::is_sorted(e.values.begin(), e.values.end())) {
      fail(ErrorCode::kMalformed, "encoder table for " + e.meta + " is inconsistent");
    }
    enc.metas.push_back(std::move(e));
  }
  return enc;
}

}  // namespace adfp
