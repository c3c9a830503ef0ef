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
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adfp/csv.hpp"
#include "adfp/encoder.hpp"
#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/gbdt.hpp"
#include "adfp/imputer.hpp"
#include "adfp/registry.hpp"
#include "adfp/rng.hpp"
#include "adfp/stats.hpp"
#include "json.hpp"

namespace adfp {

inline constexpr std::string_view kModelFormat = "adfp-classifier/1";

struct ClassifierParams {
  GbdtParams gbdt;
  std::size_t onehot_threshold = 32;
  std::size_t knn_k = 5;
  std::size_t max_reference_rows = 2000;
  std::size_t k_folds = 5;
  double decision_threshold = 0.5;

  void validate() const {
    gbdt.validate();
    if (knn_k < 1) fail(ErrorCode::kInvalidArgument, "knn_k must be >= 1");
    if (k_folds < 2) fail(ErrorCode::kInvalidArgument, "k_folds must be >= 2");
    if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "decision_threshold must lie in [0, 1]");
    }
  }
};

struct FoldMetrics {
  std::size_t fold = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
};

// Encoder, imputer and boosted model fitted on one row set.
struct Pipeline {
  std::vector<std::string> metas;
  EncoderState encoder;
  ImputerState imputer;
  GbdtModel model;

  std::vector<double> features(const RawRow& row) const {
    std::vector<double> x;
    expand(impute(encoder.code(row), imputer, encoder), encoder, x);
    return x;
  }

  double score(const RawRow& row) const { return model.predict_proba(features(row)); }
};

struct TrainedClassifier {
  Channel channel = Channel::kWeb;
  Pipeline pipeline;  // refit on every group
  ClassifierParams params;
  std::vector<FoldMetrics> cv_metrics;
  std::uint64_t seed = 0;
  // Out-of-fold results, parallel to the training groups; not persisted.
  std::vector<std::size_t> fold_of;
  std::vector<double> oof_scores;
  std::vector<int> oof_labels;
};

// Area under the ROC curve by the rank statistic, ties sharing their mean
// rank; nullopt when a class is absent.
inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] < scores[b] : a < b;
  });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t q = i; q < j; ++q) {
      if (labels[idx[q]] == 1) {
        pos_rank_sum += mean_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// Fold id per row: each class is shuffled with the seeded stream and dealt
// round-robin over the folds.
inline std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t k,
                                                 std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::kInvalidArgument, "k_folds must be >= 2");
  std::vector<std::size_t> fold(labels.size(), 0);
  Rng rng(seed);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t p = 0; p < members.size(); ++p) fold[members[p]] = p % k;
  }
  return fold;
}

inline Pipeline fit_pipeline(const std::vector<RawRow>& rows, std::span<const int> labels,
                             const std::vector<std::string>& metas,
                             const ClassifierParams& params, std::uint64_t seed) {
  Pipeline p;
  p.metas = metas;
  p.encoder = fit_encoder(rows, metas, params.onehot_threshold);
  std::vector<CodedRow> coded;
  coded.reserve(rows.size());
  for (const auto& r : rows) coded.push_back(p.encoder.code(r));
  p.imputer = fit_imputer(coded, p.encoder, params.knn_k, params.max_reference_rows, seed);
  FeatureMatrix x;
  x.n_rows = rows.size();
  x.n_cols = p.encoder.width();
  x.data.reserve(x.n_rows * x.n_cols);
  std::vector<double> buf;
  for (const auto& c : coded) {
    expand(impute(c, p.imputer, p.encoder), p.encoder, buf);
    x.data.insert(x.data.end(), buf.begin(), buf.end());
  }
  p.model = fit_gbdt(x, labels, params.gbdt, p.encoder.feature_names());
  return p;
}

namespace internal {

inline void check_channel(const std::vector<FingerprintGroup>& groups, Channel channel) {
  for (const auto& g : groups) {
    if (g.config.channel != channel) {
      fail(ErrorCode::kChannelMismatch, "group " + g.fingerprint.digest + " belongs to " +
                                            std::string(to_string(g.config.channel)) +
                                            ", classifier channel is " +
                                            std::string(to_string(channel)));
    }
  }
}

inline void check_classes(std::span<const int> labels, std::size_t need, std::string_view where) {
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    fail(ErrorCode::kSingleClass, std::string(where) + " holds a single class");
  }
  if (pos < need || neg < need) {
    fail(ErrorCode::kFoldTooSmall, std::string(where) + " has fewer than " +
                                       std::to_string(need) + " groups of a class");
  }
}

}  // namespace internal

// Out-of-fold training with caller-supplied fold ids in [0, k). Each fold's
// pipeline sees only the other folds; the stored pipeline is refit on all
// groups.
inline TrainedClassifier train_with_folds(const std::vector<FingerprintGroup>& groups,
                                          const AttributeRegistry& reg, Channel channel,
                                          const ClassifierParams& params,
                                          std::span<const std::size_t> fold_of,
                                          std::uint64_t seed) {
  params.validate();
  if (groups.empty()) fail(ErrorCode::kEmptyInput, "no fingerprint groups to train on");
  if (fold_of.size() != groups.size()) {
    fail(ErrorCode::kInvalidArgument, "fold assignment size mismatch");
  }
  internal::check_channel(groups, channel);
  std::vector<int> labels;
  for (const auto& g : groups) labels.push_back(g.ground_truth);
  internal::check_classes(labels, 1, "training data");

  const auto metas = reg.scoped_meta_groups(channel);
  const auto rows = raw_meta_rows(groups, metas, reg);
  TrainedClassifier clf;
  clf.channel = channel;
  clf.params = params;
  clf.seed = seed;
  clf.fold_of.assign(fold_of.begin(), fold_of.end());
  clf.oof_scores.assign(groups.size(), 0.0);
  clf.oof_labels.assign(groups.size(), 0);

  const std::size_t k = params.k_folds;
  for (std::size_t f : fold_of) {
    if (f >= k) fail(ErrorCode::kInvalidArgument, "fold id out of range");
  }
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<RawRow> train_rows;
    std::vector<int> train_labels;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (fold_of[i] == f) {
        test.push_back(i);
      } else {
        train_rows.push_back(rows[i]);
        train_labels.push_back(labels[i]);
      }
    }
    if (test.empty()) {
      fail(ErrorCode::kFoldTooSmall, "fold " + std::to_string(f) + " is empty");
    }
    internal::check_classes(train_labels, 2, "training split of fold " + std::to_string(f));
    const auto pipe = fit_pipeline(train_rows, train_labels, metas, params,
                                   derive_seed(seed, 0xF0'00ULL + f));
    FoldMetrics fm;
    fm.fold = f;
    fm.n_test = test.size();
    std::vector<double> s;
    std::vector<int> y;
    std::size_t correct = 0;
    for (auto i : test) {
      const double score = pipe.score(rows[i]);
      const int label = score >= params.decision_threshold ? 1 : 0;
      clf.oof_scores[i] = score;
      clf.oof_labels[i] = label;
      correct += label == labels[i] ? 1 : 0;
      s.push_back(score);
      y.push_back(labels[i]);
    }
    fm.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    fm.auc = roc_auc(s, y);
    clf.cv_metrics.push_back(fm);
  }
  clf.pipeline = fit_pipeline(rows, labels, metas, params, derive_seed(seed, 0xF1'00ULL));
  return clf;
}

inline TrainedClassifier train(const std::vector<FingerprintGroup>& groups,
                               const AttributeRegistry& reg, Channel channel,
                               const ClassifierParams& params, std::uint64_t seed) {
  params.validate();
  if (groups.empty()) fail(ErrorCode::kEmptyInput, "no fingerprint groups to train on");
  internal::check_channel(groups, channel);
  std::vector<int> labels;
  for (const auto& g : groups) labels.push_back(g.ground_truth);
  internal::check_classes(labels, params.k_folds, "training data");
  const auto folds = stratified_folds(labels, params.k_folds, seed);
  return train_with_folds(groups, reg, channel, params, folds, seed);
}

struct Prediction {
  int label = 0;
  double score = 0.0;
};

inline Prediction predict(const TrainedClassifier& clf, const FingerprintGroup& group,
                          const AttributeRegistry& reg) {
  if (group.config.channel != clf.channel) {
    fail(ErrorCode::kChannelMismatch, "group channel differs from the classifier channel");
  }
  RawRow row;
  for (const auto& m : clf.pipeline.metas) row.push_back(meta_value(group.representative, m, reg));
  const double score = clf.pipeline.score(row);
  return {score >= clf.params.decision_threshold ? 1 : 0, score};
}

// Sets measured uniqueness and score of every group from out-of-fold
// predictions, one classifier per channel present. With `allow_degenerate`,
// a channel whose data cannot support k-fold training gets the constant
// majority-class predictor instead of an error.
inline std::map<Channel, TrainedClassifier> measure_uniqueness(
    std::vector<FingerprintGroup>& groups, const AttributeRegistry& reg,
    const ClassifierParams& params, std::uint64_t seed, bool allow_degenerate = false) {
  std::map<Channel, TrainedClassifier> out;
  for (Channel ch : {Channel::kWeb, Channel::kApp}) {
    std::vector<std::size_t> idx;
    std::vector<FingerprintGroup> subset;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].config.channel == ch) {
        idx.push_back(i);
        subset.push_back(groups[i]);
      }
    }
    if (subset.empty()) continue;
    try {
      auto clf = train(subset, reg, ch, params, seed);
      for (std::size_t q = 0; q < idx.size(); ++q) {
        groups[idx[q]].measured = clf.oof_labels[q];
        groups[idx[q]].score = clf.oof_scores[q];
      }
      out.emplace(ch, std::move(clf));
    } catch (const Error& e) {
      if (!allow_degenerate || (e.code() != ErrorCode::kSingleClass &&
                                e.code() != ErrorCode::kFoldTooSmall)) {
        throw;
      }
      double pos = 0.0;
      for (const auto& g : subset) pos += g.ground_truth;
      const double rate = pos / static_cast<double>(subset.size());
      for (auto i : idx) {
        groups[i].measured = rate >= params.decision_threshold ? 1 : 0;
        groups[i].score = rate;
      }
    }
  }
  return out;
}

// Missing keys keep their defaults; "gbdt" holds the booster settings.
inline ClassifierParams classifier_params_from_json(const nlohmann::json& j,
                                                    ClassifierParams p = {}) {
  try {
    if (j.contains("gbdt")) p.gbdt = gbdt_params_from_json(j.at("gbdt"), p.gbdt);
    p.onehot_threshold = j.value("onehot_threshold", p.onehot_threshold);
    p.knn_k = j.value("knn_k", p.knn_k);
    p.max_reference_rows = j.value("max_reference_rows", p.max_reference_rows);
    p.k_folds = j.value("k_folds", p.k_folds);
    p.decision_threshold = j.value("decision_threshold", p.decision_threshold);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("classifier params: ") + e.what());
  }
  p.validate();
  return p;
}

inline nlohmann::ordered_json classifier_params_to_json(const ClassifierParams& p) {
  nlohmann::ordered_json j;
  j["gbdt"] = {{"n_rounds", p.gbdt.n_rounds},
               {"max_depth", p.gbdt.max_depth},
               {"learning_rate", p.gbdt.learning_rate},
               {"l2_leaf_penalty", p.gbdt.l2_leaf_penalty},
               {"min_leaf_count", p.gbdt.min_leaf_count}};
  j["onehot_threshold"] = p.onehot_threshold;
  j["knn_k"] = p.knn_k;
  j["max_reference_rows"] = p.max_reference_rows;
  j["k_folds"] = p.k_folds;
  j["decision_threshold"] = p.decision_threshold;
  return j;
}

inline nlohmann::ordered_json classifier_to_json(const TrainedClassifier& clf) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["channel"] = to_string(clf.channel);
  j["seed"] = clf.seed;
  j["params"] = {{"onehot_threshold", clf.params.onehot_threshold},
                 {"knn_k", clf.params.knn_k},
                 {"max_reference_rows", clf.params.max_reference_rows},
                 {"k_folds", clf.params.k_folds},
                 {"decision_threshold", clf.params.decision_threshold}};
  j["metas"] = clf.pipeline.metas;
  j["encoder"] = encoder_to_json(clf.pipeline.encoder);
  j["imputer"] = imputer_to_json(clf.pipeline.imputer);
  j["model"] = gbdt_to_json(clf.pipeline.model);
  auto cv = nlohmann::ordered_json::array();
  for (const auto& m : clf.cv_metrics) {
    cv.push_back({{"fold", m.fold},
                  {"n_test", m.n_test},
                  {"accuracy", m.accuracy},
                  {"auc", m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json()}});
  }
  j["cv_metrics"] = std::move(cv);
  return j;
}

inline TrainedClassifier classifier_from_json(const nlohmann::json& j) {
  TrainedClassifier clf;
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      fail(ErrorCode::kMalformed, "unsupported model format");
    }
    clf.channel = parse_channel(j.at("channel").get<std::string>());
    clf.seed = j.at("seed").get<std::uint64_t>();
    const auto& pj = j.at("params");
    clf.params.onehot_threshold = pj.at("onehot_threshold").get<std::size_t>();
    clf.params.knn_k = pj.at("knn_k").get<std::size_t>();
    clf.params.max_reference_rows = pj.at("max_reference_rows").get<std::size_t>();
    clf.params.k_folds = pj.at("k_folds").get<std::size_t>();
    clf.params.decision_threshold = pj.at("decision_threshold").get<double>();
    clf.pipeline.metas = j.at("metas").get<std::vector<std::string>>();
    clf.pipeline.encoder = encoder_from_json(j.at("encoder"));
    clf.pipeline.imputer = imputer_from_json(j.at("imputer"));
    clf.pipeline.model = gbdt_from_json(j.at("model"));
    clf.params.gbdt = clf.pipeline.model.params;
    for (const auto& m : j.at("cv_metrics")) {
      FoldMetrics fm;
      fm.fold = m.at("fold").get<std::size_t>();
      fm.n_test = m.at("n_test").get<std::size_t>();
      fm.accuracy = m.at("accuracy").get<double>();
      if (!m.at("auc").is_null()) fm.auc = m.at("auc").get<double>();
      clf.cv_metrics.push_back(fm);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("model file: ") + e.what());
  }
  if (clf.pipeline.encoder.metas.size() != clf.pipeline.metas.size() ||
      clf.pipeline.encoder.width() != clf.pipeline.model.feature_names.size()) {
    fail(ErrorCode::kMalformed, "model file: encoder and model disagree");
  }
  return clf;
}

inline void save_classifier(const TrainedClassifier& clf, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write model file: " + path);
  out << classifier_to_json(clf).dump() << '\n';
}

inline TrainedClassifier load_classifier(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open model file: " + path);
  try {
    return classifier_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformed, "model file " + path + ": " + e.what());
  }
}

inline void write_fold_metrics_csv(std::ostream& out, const TrainedClassifier& clf) {
  csv::write_row(out, {"channel", "fold", "n_test", "accuracy", "auc"});
  for (const auto& m : clf.cv_metrics) {
    csv::write_row(out, {std::string(to_string(clf.channel)), std::to_string(m.fold),
                         std::to_string(m.n_test), format_fixed(m.accuracy, 6),
                         m.auc ? format_fixed(*m.auc, 6) : std::string("NA")});
  }
}

}  // namespace adfp
