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
#include <numeric>
#include <vector>

#include "adfp/encoder.hpp"
#include "adfp/error.hpp"
#include "adfp/rng.hpp"
#include "json.hpp"

namespace adfp {

struct ImputerState {
  std::size_t k = 5;
  std::vector<CodedRow> reference;  // training rows, training order
  // Fallback per slot for rows with no non-missing entry; NaN if the slot is
  // missing in every reference row.
  SlotRow global;
};

namespace internal {

// Fraction of mismatches over the metas both rows report; 1 when none.
inline double hamming_distance(const CodedRow& a, const CodedRow& b) {
  std::size_t shared = 0;
  std::size_t mismatches = 0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] == kMissingCode || b[m] == kMissingCode) continue;
    ++shared;
    if (a[m] != b[m]) ++mismatches;
  }
  if (shared == 0) return 1.0;
  return static_cast<double>(mismatches) / static_cast<double>(shared);
}

inline double aggregate(const MetaEncoding& e, const std::vector<std::int32_t>& codes) {
  if (codes.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (e.kind == EncodingKind::kOneHot) {
    std::map<std::int32_t, std::size_t> votes;
    for (auto c : codes) ++votes[c];
    std::int32_t best = codes.front();
    std::size_t best_votes = 0;
    for (const auto& [c, v] : votes) {  // ascending code breaks ties
      if (v > best_votes) {
        best = c;
        best_votes = v;
      }
    }
    return static_cast<double>(best);
  }
  double sum = 0.0;
  for (auto c : codes) sum += slot_of(e, c);
  return sum / static_cast<double>(codes.size());
}

}  // namespace internal

// Keeps at most `max_reference_rows` training rows (a seeded subsample,
// original order) and precomputes the global mode/mean fallback.
inline ImputerState fit_imputer(const std::vector<CodedRow>& rows, const EncoderState& enc,
                                std::size_t k, std::size_t max_reference_rows,
                                std::uint64_t seed) {
  if (rows.empty()) fail(ErrorCode::kEmptyInput, "imputer needs reference rows");
  if (k < 1) fail(ErrorCode::kInvalidArgument, "imputer k must be >= 1");
  ImputerState imp;
  if (max_reference_rows == 0 || rows.size() <= max_reference_rows) {
    imp.reference = rows;
  } else {
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(max_reference_rows);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) imp.reference.push_back(rows[i]);
  }
  imp.k = std::min(k, imp.reference.size());
  const std::size_t width = enc.metas.size();
  imp.global.assign(width, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t m = 0; m < width; ++m) {
    std::vector<std::int32_t> codes;
    for (const auto& r : imp.reference) {
      if (r[m] != kMissingCode) codes.push_back(r[m]);
    }
    imp.global[m] = internal::aggregate(enc.metas[m], codes);
  }
  return imp;
}

// Fills every missing slot from the k nearest reference rows that report
// it: mode code for one-hot metas, mean frequency for frequency metas.
// Neighbours are ranked by (distance, reference index). A row without any
// reported meta, or a slot no reference reports near it, takes the global
// fallback.
inline SlotRow impute(const CodedRow& row, const ImputerState& imp, const EncoderState& enc) {
  if (imp.reference.empty()) fail(ErrorCode::kEmptyInput, "imputer has no reference rows");
  if (row.size() != enc.metas.size()) {
    fail(ErrorCode::kInvalidArgument, "row width does not match the imputer");
  }
  SlotRow out(row.size());
  bool any_missing = false;
  bool any_present = false;
  for (std::size_t m = 0; m < row.size(); ++m) {
    out[m] = slot_of(enc.metas[m], row[m]);
    if (row[m] == kMissingCode) {
      any_missing = true;
    } else {
      any_present = true;
    }
  }
  if (!any_missing) return out;
  if (!any_present) return imp.global;

  std::vector<std::pair<double, std::size_t>> ranked(imp.reference.size());
  for (std::size_t r = 0; r < imp.reference.size(); ++r) {
    ranked[r] = {internal::hamming_distance(row, imp.reference[r]), r};
  }
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t m = 0; m < row.size(); ++m) {
    if (row[m] != kMissingCode) continue;
    std::vector<std::int32_t> codes;
    for (const auto& [d, r] : ranked) {
      const auto c = imp.reference[r][m];
      if (c == kMissingCode) continue;
      codes.push_back(c);
      if (codes.size() == imp.k) break;
    }
    out[m] = codes.empty() ? imp.global[m] : internal::aggregate(enc.metas[m], codes);
  }
  return out;
}

inline nlohmann::ordered_json imputer_to_json(const ImputerState& imp) {
  nlohmann::ordered_json j;
  j["k"] = imp.k;
  j["reference"] = imp.reference;
  auto g = nlohmann::ordered_json::array();
  for (double v : imp.global) {
    g.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
  }
  j["global"] = std::move(g);
  return j;
}

inline ImputerState imputer_from_json(const nlohmann::json& j) {
  ImputerState imp;
  imp.k = j.at("k").get<std::size_t>();
  imp.reference = j.at("reference").get<std::vector<CodedRow>>();
  for (const auto& v : j.at("global")) {
    imp.global.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                     : v.get<double>());
  }
  if (imp.k < 1 || imp.k > imp.reference.size()) {
    fail(ErrorCode::kMalformed, "imputer k outside [1, reference rows]");
  }
  return imp;
}

}  // namespace adfp
