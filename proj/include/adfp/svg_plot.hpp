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
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adfp/csv.hpp"
#include "adfp/error.hpp"
#include "adfp/metrics.hpp"
#include "adfp/stats.hpp"

namespace adfp::plot {

inline std::string escape_xml(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

struct Series {
  std::string name;
  std::vector<std::optional<double>> values;  // one per category; nullopt draws nothing
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;
  // Colour each bar by sign instead of by series.
  bool sign_colours = false;
};

struct Heatmap {
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> cells;  // rows x columns, values in [0, 1]
};

inline constexpr std::string_view kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                                "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
inline constexpr std::string_view kPositive = "#3060c0";
inline constexpr std::string_view kNegative = "#c03030";

// Grouped vertical bars; the y axis always includes 0.
inline std::string render_bars(const BarChart& c) {
  if (c.categories.empty() || c.series.empty()) {
    fail(ErrorCode::kEmptyInput, "bar chart without categories or series");
  }
  for (const auto& s : c.series) {
    if (s.values.size() != c.categories.size()) {
      fail(ErrorCode::kInvalidArgument, "series " + s.name + " does not match the categories");
    }
  }
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& s : c.series) {
    for (const auto& v : s.values) {
      if (!v) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double left = 70, right = 20, top = 40, bottom = 120;
  const double group_w = std::max(60.0, 18.0 * static_cast<double>(c.series.size()) + 20.0);
  const double plot_w = group_w * static_cast<double>(c.categories.size());
  const double plot_h = 300;
  const double width = left + plot_w + right + 140;
  const double height = top + plot_h + bottom;
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << escape_xml(c.title) << "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    const double y = y_of(v);
    o << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + plot_w) << "\" y1=\"" << num(y)
      << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << num(v) << "</text>\n";
  }
  o << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + plot_w) << "\" y1=\""
    << num(y_of(0)) << "\" y2=\"" << num(y_of(0)) << "\" stroke=\"black\"/>\n";
  o << "<text transform=\"translate(16," << num(top + plot_h / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(c.y_label) << "</text>\n";
  const double bar_w = (group_w - 20.0) / static_cast<double>(c.series.size());
  for (std::size_t i = 0; i < c.categories.size(); ++i) {
    const double gx = left + group_w * static_cast<double>(i) + 10.0;
    for (std::size_t s = 0; s < c.series.size(); ++s) {
      const auto& v = c.series[s].values[i];
      if (!v) continue;
      const double y0 = y_of(std::max(*v, 0.0));
      const double y1 = y_of(std::min(*v, 0.0));
      const std::string_view fill = c.sign_colours ? (*v < 0 ? kNegative : kPositive)
                                                   : kPalette[s % std::size(kPalette)];
      o << "<rect x=\"" << num(gx + bar_w * static_cast<double>(s)) << "\" y=\"" << num(y0)
        << "\" width=\"" << num(bar_w - 1) << "\" height=\"" << num(y1 - y0) << "\" fill=\""
        << fill << "\"><title>" << escape_xml(c.series[s].name) << " " << num(*v)
        << "</title></rect>\n";
    }
    const double cx = gx + (group_w - 20.0) / 2;
    o << "<text transform=\"translate(" << num(cx) << "," << num(top + plot_h + 12)
      << ") rotate(40)\" text-anchor=\"start\">" << escape_xml(c.categories[i]) << "</text>\n";
  }
  if (!c.sign_colours) {
    for (std::size_t s = 0; s < c.series.size(); ++s) {
      const double ly = top + 16.0 * static_cast<double>(s);
      o << "<rect x=\"" << num(left + plot_w + 20) << "\" y=\"" << num(ly) << "\" width=\"10\""
        << " height=\"10\" fill=\"" << kPalette[s % std::size(kPalette)] << "\"/>\n";
      o << "<text x=\"" << num(left + plot_w + 36) << "\" y=\"" << num(ly + 9) << "\">"
        << escape_xml(c.series[s].name) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

// Cells shade from white (0) to dark blue (1); empty cells are grey.
inline std::string render_heatmap(const Heatmap& h) {
  if (h.rows.empty() || h.columns.empty()) fail(ErrorCode::kEmptyInput, "empty heatmap");
  if (h.cells.size() != h.rows.size()) {
    fail(ErrorCode::kInvalidArgument, "heatmap cells do not match the rows");
  }
  for (const auto& r : h.cells) {
    if (r.size() != h.columns.size()) {
      fail(ErrorCode::kInvalidArgument, "heatmap cells do not match the columns");
    }
  }
  const double left = 200, top = 150, cell = 22;
  const double width = left + cell * static_cast<double>(h.columns.size()) + 20;
  const double height = top + cell * static_cast<double>(h.rows.size()) + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape_xml(h.title) << "</text>\n";
  for (std::size_t c = 0; c < h.columns.size(); ++c) {
    const double x = left + cell * static_cast<double>(c) + cell / 2;
    o << "<text transform=\"translate(" << num(x) << "," << num(top - 6)
      << ") rotate(-60)\" text-anchor=\"start\">" << escape_xml(h.columns[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < h.rows.size(); ++r) {
    const double y = top + cell * static_cast<double>(r);
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + cell * 0.7)
      << "\" text-anchor=\"end\">" << escape_xml(h.rows[r]) << "</text>\n";
    for (std::size_t c = 0; c < h.columns.size(); ++c) {
      const auto& v = h.cells[r][c];
      std::string fill = "#cccccc";
      if (v) {
        const double t = std::clamp(*v, 0.0, 1.0);
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 - 225 * t),
                      static_cast<int>(255 - 175 * t), static_cast<int>(255 - 55 * t));
        fill = buf;
      }
      o << "<rect x=\"" << num(left + cell * static_cast<double>(c)) << "\" y=\"" << num(y)
        << "\" width=\"" << num(cell - 1) << "\" height=\"" << num(cell - 1) << "\" fill=\""
        << fill << "\"><title>" << escape_xml(h.rows[r]) << " / " << escape_xml(h.columns[c])
        << (v ? " " + num(*v) : std::string(" n/a")) << "</title></rect>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

// TV, MV and A per configuration.
inline BarChart metrics_chart(const std::map<DeviceConfig, VulnerabilityReport>& reports) {
  BarChart c;
  c.title = "Vulnerability per device configuration";
  c.y_label = "rate";
  c.series = {{"TV", {}}, {"MV", {}}, {"A", {}}};
  for (const auto& [config, r] : reports) {
    c.categories.push_back(config.key());
    c.series[0].values.push_back(r.tv);
    c.series[1].values.push_back(r.mv);
    c.series[2].values.push_back(r.accuracy);
  }
  return c;
}

// Normalized entropy per (meta-attribute, configuration); unreported cells
// stay empty.
inline Heatmap entropy_heatmap(const StatsReport& stats) {
  Heatmap h;
  h.title = "Normalized entropy per meta-attribute";
  std::map<std::string, std::size_t> col_of;
  std::map<std::string, std::size_t> row_of;
  for (const auto& r : stats.rows) {
    if (col_of.emplace(r.config.key(), h.columns.size()).second) {
      h.columns.push_back(r.config.key());
    }
    if (row_of.emplace(r.meta_attribute, h.rows.size()).second) {
      h.rows.push_back(r.meta_attribute);
    }
  }
  h.cells.assign(h.rows.size(), std::vector<std::optional<double>>(h.columns.size()));
  for (const auto& r : stats.rows) {
    if (r.reported) h.cells[row_of[r.meta_attribute]][col_of[r.config.key()]] = r.normalized_entropy;
  }
  return h;
}

// Percentage variation per configuration for one metric column ("dTV_pct",
// "dMV_pct" or "dA_pct") of a comparison CSV, one series per policy.
inline BarChart deltas_chart(std::istream& comparison_csv, const std::string& column) {
  const auto t = csv::read(comparison_csv);
  const auto c_policy = t.column("policy");
  const auto c_metric = t.column(column);
  const std::size_t c_cfg[] = {t.column("device_type"), t.column("os"), t.column("agent"),
                               t.column("channel")};
  BarChart c;
  c.title = "Variation of " + column + " with respect to the baseline";
  c.y_label = "percent";
  std::map<std::string, std::size_t> cat_of;
  std::map<std::string, std::size_t> series_of;
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  for (const auto& row : t.rows) {
    const std::string key =
        row[c_cfg[0]] + "/" + row[c_cfg[1]] + "/" + row[c_cfg[2]] + "/" + row[c_cfg[3]];
    if (cat_of.emplace(key, c.categories.size()).second) c.categories.push_back(key);
    if (series_of.emplace(row[c_policy], c.series.size()).second) {
      c.series.push_back({row[c_policy], {}});
    }
    if (row[c_metric] == kUndefinedDelta) continue;
    try {
      cells[{series_of[row[c_policy]], cat_of[key]}] = std::stod(row[c_metric]);
    } catch (const std::logic_error&) {
      fail(ErrorCode::kMalformed, "comparison CSV: bad " + column + " value " + row[c_metric]);
    }
  }
  for (std::size_t s = 0; s < c.series.size(); ++s) {
    c.series[s].values.assign(c.categories.size(), std::nullopt);
    for (std::size_t i = 0; i < c.categories.size(); ++i) {
      auto it = cells.find({s, i});
      if (it != cells.end()) c.series[s].values[i] = it->second;
    }
  }
  c.sign_colours = c.series.size() == 1;
  return c;
}

}  // namespace adfp::plot
