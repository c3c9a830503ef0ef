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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adfp/error.hpp"
#include "json.hpp"

namespace adfp {

struct GbdtParams {
  int n_rounds = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  double l2_leaf_penalty = 1.0;
  int min_leaf_count = 5;

  void validate() const {
    if (n_rounds < 0) fail(ErrorCode::kInvalidArgument, "n_rounds must be >= 0");
    if (max_depth < 0) fail(ErrorCode::kInvalidArgument, "max_depth must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "learning_rate must lie in (0, 1]");
    }
    if (!(l2_leaf_penalty >= 0.0)) {
      fail(ErrorCode::kInvalidArgument, "l2_leaf_penalty must be >= 0");
    }
    if (min_leaf_count < 1) fail(ErrorCode::kInvalidArgument, "min_leaf_count must be >= 1");
  }
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output

  bool is_leaf() const { return feature < 0; }
};

// x[feature] < threshold goes left.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int n = 0;
    while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mean logistic loss of margins against 0/1 labels.
inline double logistic_loss(std::span<const double> margins, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    total += std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))) - labels[i] * m;
  }
  return margins.empty() ? 0.0 : total / static_cast<double>(margins.size());
}

// prediction = sigmoid(base_score + learning_rate * sum of tree outputs).
struct GbdtModel {
  GbdtParams params;
  double base_score = 0.0;
  std::vector<std::string> feature_names;
  std::vector<RegressionTree> trees;
  // Training loss before any tree, then after each round.
  std::vector<double> training_loss;

  double margin(std::span<const double> x, std::size_t n_trees) const {
    double s = 0.0;
    const std::size_t n = std::min(n_trees, trees.size());
    for (std::size_t t = 0; t < n; ++t) s += trees[t].predict(x);
    return base_score + params.learning_rate * s;
  }

  double margin(std::span<const double> x) const { return margin(x, trees.size()); }

  double predict_proba(std::span<const double> x) const { return sigmoid(margin(x)); }
};

// Row-major dense matrix.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * n_cols, n_cols};
  }
};

namespace internal {

struct ColumnEntry {
  double value;
  std::uint32_t row;
};

// Non-zero entries per column, ascending by (value, row).
inline std::vector<std::vector<ColumnEntry>> sorted_columns(const FeatureMatrix& x) {
  std::vector<std::vector<ColumnEntry>> cols(x.n_cols);
  for (std::size_t r = 0; r < x.n_rows; ++r) {
    for (std::size_t c = 0; c < x.n_cols; ++c) {
      const double v = x.data[r * x.n_cols + c];
      if (v != 0.0) cols[c].push_back({v, static_cast<std::uint32_t>(r)});
    }
  }
  for (auto& col : cols) {
    std::sort(col.begin(), col.end(), [](const ColumnEntry& a, const ColumnEntry& b) {
      return a.value != b.value ? a.value < b.value : a.row < b.row;
    });
  }
  return cols;
}

struct Stats {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t n = 0;

  void add(double gi, double hi) {
    g += gi;
    h += hi;
    ++n;
  }
};

struct BestSplit {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

inline double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

// Level-wise exact greedy tree over non-negative features. The implicit
// zero bucket of each column is the node total minus its non-zero entries.
// Candidates are scanned by ascending feature, then ascending threshold,
// and only a strictly larger gain replaces the incumbent. Fills
// `leaf_of_row` with the leaf node index of every row.
inline RegressionTree build_tree(const std::vector<std::vector<ColumnEntry>>& cols,
                                 std::size_t n_rows, std::span<const double> grad,
                                 std::span<const double> hess, const GbdtParams& p,
                                 std::vector<int>& leaf_of_row) {
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n_rows, 0);
  std::vector<int> active = {0};
  const double lambda = p.l2_leaf_penalty;
  const auto min_leaf = static_cast<std::uint32_t>(p.min_leaf_count);

  auto set_leaf = [&](int node, const Stats& s) {
    tree.nodes[static_cast<std::size_t>(node)].value = -s.g / (s.h + lambda);
  };

  for (int depth = 0; !active.empty(); ++depth) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) {
      slot_of[static_cast<std::size_t>(active[s])] = static_cast<int>(s);
    }
    std::vector<Stats> total(active.size());
    for (std::size_t r = 0; r < n_rows; ++r) {
      const int s = node_of[r] >= 0 ? slot_of[static_cast<std::size_t>(node_of[r])] : -1;
      if (s >= 0) total[static_cast<std::size_t>(s)].add(grad[r], hess[r]);
    }
    if (depth >= p.max_depth) {
      for (std::size_t s = 0; s < active.size(); ++s) set_leaf(active[s], total[s]);
      break;
    }

    std::vector<BestSplit> best(active.size());
    std::vector<Stats> acc(active.size());
    std::vector<double> last(active.size());
    std::vector<char> has_prev(active.size());
    for (std::size_t f = 0; f < cols.size(); ++f) {
      const auto& col = cols[f];
      if (col.empty()) continue;
      for (auto& a : acc) a = Stats{};
      for (const auto& e : col) {
        const int node = node_of[e.row];
        const int s = node >= 0 ? slot_of[static_cast<std::size_t>(node)] : -1;
        if (s >= 0) acc[static_cast<std::size_t>(s)].add(grad[e.row], hess[e.row]);
      }
      for (std::size_t s = 0; s < active.size(); ++s) {
        Stats zero{total[s].g - acc[s].g, total[s].h - acc[s].h, total[s].n - acc[s].n};
        acc[s] = zero;
        last[s] = 0.0;
        has_prev[s] = zero.n > 0;
      }
      for (const auto& e : col) {
        const int node = node_of[e.row];
        const int si = node >= 0 ? slot_of[static_cast<std::size_t>(node)] : -1;
        if (si < 0) continue;
        const auto s = static_cast<std::size_t>(si);
        if (has_prev[s] && e.value != last[s]) {
          const Stats& l = acc[s];
          const std::uint32_t rn = total[s].n - l.n;
          if (l.n >= min_leaf && rn >= min_leaf) {
            const double gr = total[s].g - l.g;
            const double hr = total[s].h - l.h;
            const double gain = 0.5 * (leaf_score(l.g, l.h, lambda) + leaf_score(gr, hr, lambda) -
                                       leaf_score(total[s].g, total[s].h, lambda));
            if (gain > best[s].gain) {
              best[s] = {gain, static_cast<int>(f), 0.5 * (last[s] + e.value)};
            }
          }
        }
        acc[s].add(grad[e.row], hess[e.row]);
        last[s] = e.value;
        has_prev[s] = 1;
      }
    }

    std::vector<int> next;
    std::vector<std::pair<int, std::size_t>> splits;  // (feature, slot)
    for (std::size_t s = 0; s < active.size(); ++s) {
      const int node = active[s];
      if (best[s].feature < 0) {
        set_leaf(node, total[s]);
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& n = tree.nodes[static_cast<std::size_t>(node)];
      n.feature = best[s].feature;
      n.threshold = best[s].threshold;
      n.left = left;
      n.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
      splits.emplace_back(best[s].feature, s);
    }
    // Zeros sit below every threshold, so rows default to the left child.
    for (std::size_t r = 0; r < n_rows; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const auto& n = tree.nodes[static_cast<std::size_t>(node)];
      node_of[r] = n.is_leaf() ? -1 - node : n.left;
    }
    std::sort(splits.begin(), splits.end());
    for (std::size_t i = 0; i < splits.size();) {
      const int f = splits[i].first;
      std::size_t j = i;
      while (j < splits.size() && splits[j].first == f) ++j;
      for (const auto& e : cols[static_cast<std::size_t>(f)]) {
        const int node = node_of[e.row];
        if (node < 0) continue;
        // node is a fresh left child; its parent is active[slot].
        for (std::size_t q = i; q < j; ++q) {
          const auto& parent = tree.nodes[static_cast<std::size_t>(active[splits[q].second])];
          if (parent.left == node && e.value >= parent.threshold) {
            node_of[e.row] = parent.right;
            break;
          }
        }
      }
      i = j;
    }
    active = std::move(next);
  }
  leaf_of_row.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    leaf_of_row[r] = node_of[r] < 0 ? -1 - node_of[r] : node_of[r];
  }
  return tree;
}

}  // namespace internal

// Boosts logistic-loss trees. A round whose tree would raise the training
// loss has its leaf values halved (at most 8 times) and is otherwise
// replaced by a zero tree, so training_loss is non-increasing.
inline GbdtModel fit_gbdt(const FeatureMatrix& x, std::span<const int> labels,
                          const GbdtParams& params, std::vector<std::string> feature_names = {}) {
  params.validate();
  if (x.n_rows == 0) fail(ErrorCode::kEmptyInput, "no training rows");
  if (labels.size() != x.n_rows) fail(ErrorCode::kInvalidArgument, "label count mismatch");
  for (double v : x.data) {
    if (!(v >= 0.0)) fail(ErrorCode::kInvalidArgument, "features must be finite and >= 0");
  }
  GbdtModel model;
  model.params = params;
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty()) {
    for (std::size_t c = 0; c < x.n_cols; ++c) model.feature_names.push_back("f" + std::to_string(c));
  }
  double positives = 0.0;
  for (int y : labels) positives += y;
  const double rate = std::clamp(positives / static_cast<double>(x.n_rows), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(rate / (1.0 - rate));

  const auto cols = internal::sorted_columns(x);
  std::vector<double> margins(x.n_rows, model.base_score);
  std::vector<double> grad(x.n_rows), hess(x.n_rows), trial(x.n_rows);
  std::vector<int> leaf_of_row;
  double loss = logistic_loss(margins, labels);
  model.training_loss.push_back(loss);
  const double lr = params.learning_rate;

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < x.n_rows; ++i) {
      const double p = sigmoid(margins[i]);
      grad[i] = p - labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    auto tree = internal::build_tree(cols, x.n_rows, grad, hess, params, leaf_of_row);
    bool accepted = false;
    for (int halving = 0; halving <= 8 && !accepted; ++halving) {
      for (std::size_t i = 0; i < x.n_rows; ++i) {
        trial[i] = margins[i] + lr * tree.nodes[static_cast<std::size_t>(leaf_of_row[i])].value;
      }
      const double trial_loss = logistic_loss(trial, labels);
      if (trial_loss <= loss) {
        accepted = true;
        loss = trial_loss;
        margins.swap(trial);
      } else {
        for (auto& n : tree.nodes) n.value *= 0.5;
      }
    }
    if (!accepted) tree = RegressionTree{{TreeNode{}}};
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(loss);
  }
  return model;
}

inline nlohmann::ordered_json tree_to_json(const RegressionTree& tree, int node = 0) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  nlohmann::ordered_json j;
  if (n.is_leaf()) {
    j["leaf"] = n.value;
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["left"] = tree_to_json(tree, n.left);
  j["right"] = tree_to_json(tree, n.right);
  return j;
}

namespace internal {

inline int tree_from_json(const nlohmann::json& j, RegressionTree& tree, std::size_t n_features) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    tree.nodes.back().value = j.at("leaf").get<double>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
    fail(ErrorCode::kMalformed, "split feature index out of range");
  }
  const double threshold = j.at("threshold").get<double>();
  const int left = tree_from_json(j.at("left"), tree, n_features);
  const int right = tree_from_json(j.at("right"), tree, n_features);
  auto& n = tree.nodes[static_cast<std::size_t>(id)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return id;
}

}  // namespace internal

inline nlohmann::ordered_json gbdt_to_json(const GbdtModel& m) {
  nlohmann::ordered_json j;
  j["hyperparameters"] = {{"n_rounds", m.params.n_rounds},
                          {"max_depth", m.params.max_depth},
                          {"learning_rate", m.params.learning_rate},
                          {"l2_leaf_penalty", m.params.l2_leaf_penalty},
                          {"min_leaf_count", m.params.min_leaf_count}};
  j["base_score"] = m.base_score;
  j["feature_names"] = m.feature_names;
  j["training_loss"] = m.training_loss;
  j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) j["trees"].push_back(tree_to_json(t));
  return j;
}

inline GbdtParams gbdt_params_from_json(const nlohmann::json& j, GbdtParams p = {}) {
  p.n_rounds = j.value("n_rounds", p.n_rounds);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.l2_leaf_penalty = j.value("l2_leaf_penalty", p.l2_leaf_penalty);
  p.min_leaf_count = j.value("min_leaf_count", p.min_leaf_count);
  p.validate();
  return p;
}

inline GbdtModel gbdt_from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.params = gbdt_params_from_json(j.at("hyperparameters"));
  m.base_score = j.at("base_score").get<double>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.training_loss = j.value("training_loss", std::vector<double>{});
  for (const auto& tj : j.at("trees")) {
    RegressionTree t;
    internal::tree_from_json(tj, t, m.feature_names.size());
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace adfp
