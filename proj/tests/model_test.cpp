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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adfp/classifier.hpp"
#include "test_support.hpp"

namespace adfp {
namespace {

// Pair-counting AUC: P(score_pos > score_neg) + 0.5 P(equal).
std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  if (pairs == 0.0) return std::nullopt;
  return wins / pairs;
}

TEST(RocAuc, MatchesPairCounting) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(2 + rng() % 40);
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = static_cast<double>(rng() % 7) / 7.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    const auto a = roc_auc(s, y);
    const auto b = pairwise_auc(s, y);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_NEAR(*a, *b, 1e-12);
    }
  }
  EXPECT_FALSE(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}).has_value());
}

TEST(StratifiedFolds, BalancedAndDeterministic) {
  std::vector<int> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 1 : 0;
  const auto f = stratified_folds(y, 5, 9);
  EXPECT_EQ(f, stratified_folds(y, 5, 9));
  std::map<std::size_t, std::array<int, 2>> per;
  for (std::size_t i = 0; i < y.size(); ++i) ++per[f[i]][static_cast<std::size_t>(y[i])];
  ASSERT_EQ(per.size(), 5u);
  for (const auto& [fold, c] : per) {
    EXPECT_GE(c[0], 13);
    EXPECT_LE(c[0], 14);
    EXPECT_GE(c[1], 6);
    EXPECT_LE(c[1], 7);
  }
  EXPECT_THROW(stratified_folds(y, 1, 9), Error);
}

TEST(Encoder, OneHotBelowThreshold) {
  std::vector<RawRow> rows = {{"a"}, {"b"}, {"c"}, {std::nullopt}};
  const auto enc = fit_encoder(rows, {"m"}, 32);
  ASSERT_EQ(enc.metas.size(), 1u);
  EXPECT_EQ(enc.metas[0].kind, EncodingKind::kOneHot);
  EXPECT_EQ(enc.width(), 3u);
  std::vector<double> x;
  expand(SlotRow{1.0}, enc, x);
  EXPECT_EQ(x, (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_EQ(enc.code({std::string("zz")})[0], kUnseenCode);
  EXPECT_EQ(enc.code({std::nullopt})[0], kMissingCode);
}

TEST(Encoder, FrequencyAboveThreshold) {
  std::vector<RawRow> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({std::string("v")});
  for (int i = 0; i < 450; ++i) rows.push_back({"u" + std::to_string(i)});
  const auto enc = fit_encoder(rows, {"m"}, 32);
  EXPECT_EQ(enc.metas[0].kind, EncodingKind::kFrequency);
  EXPECT_EQ(enc.width(), 1u);
  EXPECT_DOUBLE_EQ(slot_of(enc.metas[0], enc.metas[0].code(std::string("v"))), 0.1);
  EXPECT_EQ(slot_of(enc.metas[0], enc.metas[0].code(std::string("never"))), 0.0);
  EXPECT_THROW(fit_encoder(std::vector<RawRow>{}, {"m"}, 32), Error);
}

TEST(Encoder, JsonRoundTrip) {
  std::vector<RawRow> rows = {{"a", "x"}, {"b", std::nullopt}};
  const auto enc = fit_encoder(rows, {"m", "n"}, 1);
  const auto back = encoder_from_json(nlohmann::json::parse(encoder_to_json(enc).dump()));
  EXPECT_EQ(back.width(), enc.width());
  EXPECT_EQ(back.feature_names(), enc.feature_names());
}

EncoderState onehot_encoder(std::size_t metas, std::size_t values) {
  std::vector<RawRow> rows;
  std::vector<std::string> names;
  for (std::size_t m = 0; m < metas; ++m) names.push_back("m" + std::to_string(m));
  for (std::size_t v = 0; v < values; ++v) rows.push_back(RawRow(metas, std::to_string(v)));
  return fit_encoder(rows, names, 32);
}

TEST(Imputer, UnanimousNeighbours) {
  const auto enc = onehot_encoder(3, 4);
  std::vector<CodedRow> ref = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {0, 0, 0}, {0, 0, 0}};
  const auto imp = fit_imputer(ref, enc, 3, 0, 1);
  const auto out = impute({1, 2, kMissingCode}, imp, enc);
  EXPECT_EQ(out, (SlotRow{1.0, 2.0, 3.0}));
}

TEST(Imputer, AllMissingUsesGlobalMode) {
  const auto enc = onehot_encoder(2, 4);
  std::vector<CodedRow> ref = {{1, 2}, {1, 3}, {0, 3}};
  const auto imp = fit_imputer(ref, enc, 2, 0, 1);
  const auto out = impute({kMissingCode, kMissingCode}, imp, enc);
  EXPECT_EQ(out, (SlotRow{1.0, 3.0}));
  EXPECT_THROW(fit_imputer({}, enc, 2, 0, 1), Error);
  EXPECT_THROW(fit_imputer(ref, enc, 0, 0, 1), Error);
}

TEST(Imputer, NearestNeighbourMatchesBruteForce) {
  const std::size_t width = 6;
  const auto enc = onehot_encoder(width, 3);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<CodedRow> ref(20, CodedRow(width));
    for (auto& r : ref) {
      for (auto& c : r) c = rng() % 5 == 0 ? kMissingCode : static_cast<std::int32_t>(rng() % 3);
    }
    CodedRow q(width);
    for (auto& c : q) c = static_cast<std::int32_t>(rng() % 3);
    const std::size_t slot = rng() % width;
    q[slot] = kMissingCode;
    // Oracle: lowest (mismatch fraction, index) among references reporting
    // the slot; the fraction is compared by cross-multiplication.
    std::optional<std::size_t> best;
    std::size_t best_mis = 0, best_shared = 1;
    for (std::size_t r = 0; r < ref.size(); ++r) {
      if (ref[r][slot] == kMissingCode) continue;
      std::size_t mis = 0, shared = 0;
      for (std::size_t m = 0; m < width; ++m) {
        if (q[m] == kMissingCode || ref[r][m] == kMissingCode) continue;
        ++shared;
        mis += q[m] != ref[r][m] ? 1 : 0;
      }
      if (shared == 0) {
        mis = 1;
        shared = 1;
      }
      if (!best || mis * best_shared < best_mis * shared) {
        best = r;
        best_mis = mis;
        best_shared = shared;
      }
    }
    const auto imp = fit_imputer(ref, enc, 1, 0, 1);
    const auto out = impute(q, imp, enc);
    ASSERT_TRUE(best.has_value());
    EXPECT_EQ(out[slot], static_cast<double>(ref[*best][slot])) << "trial " << t;
  }
}

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix x;
  x.n_rows = rows.size();
  x.n_cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) x.data.insert(x.data.end(), r.begin(), r.end());
  return x;
}

TEST(Gbdt, SeparableDataIsLearned) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const double a = static_cast<double>(rng() % 100);
    rows.push_back({a, static_cast<double>(rng() % 10)});
    y.push_back(a >= 50 ? 1 : 0);
  }
  GbdtParams p;
  p.n_rounds = 30;
  const auto x = matrix(rows);
  const auto m = fit_gbdt(x, y, p);
  ASSERT_EQ(m.training_loss.size(), 31u);
  for (std::size_t i = 1; i < m.training_loss.size(); ++i) {
    EXPECT_LE(m.training_loss[i], m.training_loss[i - 1]);
  }
  EXPECT_LT(m.training_loss.back(), 0.5 * m.training_loss.front());
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.n_rows; ++r) {
    correct += (m.predict_proba(x.row(r)) >= 0.5 ? 1 : 0) == y[r] ? 1 : 0;
  }
  EXPECT_EQ(correct, x.n_rows);
  const auto back = gbdt_from_json(nlohmann::json::parse(gbdt_to_json(m).dump()));
  for (std::size_t r = 0; r < x.n_rows; ++r) {
    EXPECT_EQ(back.margin(x.row(r)), m.margin(x.row(r)));
  }
}

TEST(Gbdt, PrefixEnsemblesReproduceRecordedLoss) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 150; ++i) {
    const double a = static_cast<double>(rng() % 20);
    const double b = static_cast<double>(rng() % 20);
    rows.push_back({a, b});
    y.push_back((a + b >= 20) != (rng() % 10 == 0) ? 1 : 0);
  }
  GbdtParams p;
  p.n_rounds = 15;
  p.max_depth = 2;
  const auto x = matrix(rows);
  const auto m = fit_gbdt(x, y, p);
  ASSERT_EQ(m.training_loss.size(), 16u);
  for (std::size_t t = 0; t <= m.trees.size(); ++t) {
    // Direct mean negative log-likelihood of the first t trees.
    long double loss = 0.0L;
    for (std::size_t r = 0; r < x.n_rows; ++r) {
      const long double prob = 1.0L / (1.0L + std::exp(-static_cast<long double>(m.margin(x.row(r), t))));
      loss -= y[r] ? std::log(prob) : std::log(1.0L - prob);
    }
    loss /= static_cast<long double>(x.n_rows);
    EXPECT_NEAR(static_cast<double>(loss), m.training_loss[t], 1e-9) << "t=" << t;
  }
}

TEST(Gbdt, ZeroRoundsPredictsBaseRate) {
  const auto x = matrix({{1.0}, {2.0}, {3.0}, {4.0}});
  const std::vector<int> y = {1, 1, 1, 0};
  GbdtParams p;
  p.n_rounds = 0;
  const auto m = fit_gbdt(x, y, p);
  EXPECT_TRUE(m.trees.empty());
  EXPECT_NEAR(m.predict_proba(x.row(0)), 0.75, 1e-12);
}

TEST(Gbdt, RejectsBadInput) {
  GbdtParams p;
  p.learning_rate = 0.0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(fit_gbdt(matrix({{-1.0}}), std::vector<int>{1}, GbdtParams{}), Error);
  EXPECT_THROW(fit_gbdt(FeatureMatrix{}, std::vector<int>{}, GbdtParams{}), Error);
}

// Groups whose label is carried by meta "key" (one of two values per label
// family) with an uninformative "noise" meta.
std::vector<FingerprintGroup> separable_groups(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FingerprintGroup> out;
  for (std::size_t i = 0; i < n; ++i) {
    FingerprintGroup g;
    g.config = testing::web_config();
    g.fingerprint.digest = std::to_string(i);
    g.ground_truth = static_cast<int>(rng() % 2);
    g.representative.set("key", (g.ground_truth ? "u" : "s") + std::to_string(rng() % 2));
    g.representative.set("noise", std::to_string(rng() % 4));
    g.n_samples = 2;
    out.push_back(std::move(g));
  }
  return out;
}

double oof_accuracy(const TrainedClassifier& clf, const std::vector<FingerprintGroup>& groups) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    correct += clf.oof_labels[i] == groups[i].ground_truth ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(groups.size());
}

ClassifierParams small_params(int rounds) {
  ClassifierParams p;
  p.gbdt.n_rounds = rounds;
  p.gbdt.max_depth = 3;
  return p;
}

TEST(Classifier, SeparableByOneAttribute) {
  const auto reg = testing::toy_registry({"key", "noise"});
  const auto groups = separable_groups(300, 1);
  const auto clf = train(groups, reg, Channel::kWeb, small_params(20), 7);
  EXPECT_GE(oof_accuracy(clf, groups), 0.95);
  ASSERT_EQ(clf.cv_metrics.size(), 5u);
  for (const auto& m : clf.cv_metrics) {
    ASSERT_TRUE(m.auc.has_value());
    EXPECT_GE(*m.auc, 0.95);
  }
}

TEST(Classifier, HeldOutLabelsDoNotLeak) {
  const auto reg = testing::toy_registry({"key", "noise"});
  const auto groups = separable_groups(200, 11);
  const auto params = small_params(10);
  std::vector<int> labels;
  for (const auto& g : groups) labels.push_back(g.ground_truth);
  const auto folds = stratified_folds(labels, params.k_folds, 7);
  const auto base = train_with_folds(groups, reg, Channel::kWeb, params, folds, 7);

  // Reverse the labels of fold 0 only; its scores must not move.
  auto permuted = groups;
  std::vector<std::size_t> held;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (folds[i] == 0) held.push_back(i);
  }
  ASSERT_GT(held.size(), 1u);
  for (std::size_t j = 0; j < held.size(); ++j) {
    permuted[held[j]].ground_truth = groups[held[held.size() - 1 - j]].ground_truth;
  }
  std::size_t changed = 0;
  for (auto i : held) changed += permuted[i].ground_truth != groups[i].ground_truth ? 1 : 0;
  ASSERT_GT(changed, 0u);
  const auto again = train_with_folds(permuted, reg, Channel::kWeb, params, folds, 7);
  for (auto i : held) EXPECT_EQ(again.oof_scores[i], base.oof_scores[i]) << "group " << i;
}

TEST(Classifier, ZeroRoundsIsMajorityPredictor) {
  const auto reg = testing::toy_registry({"key", "noise"});
  auto groups = separable_groups(100, 2);
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i].ground_truth = i < 70 ? 1 : 0;
  const auto clf = train(groups, reg, Channel::kWeb, small_params(0), 7);
  EXPECT_DOUBLE_EQ(oof_accuracy(clf, groups), 0.7);
}

TEST(Classifier, ConflictingDuplicatesGiveChance) {
  const auto reg = testing::toy_registry({"key", "noise"});
  auto groups = separable_groups(200, 3);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    groups[i].ground_truth = static_cast<int>(i % 2);
    groups[i].representative.set("key", "same");
    groups[i].representative.set("noise", "same");
  }
  const auto clf = train(groups, reg, Channel::kWeb, small_params(10), 7);
  EXPECT_NEAR(oof_accuracy(clf, groups), 0.5, 0.05);
}

TEST(Classifier, TieAtThresholdPredictsUnique) {
  const auto reg = testing::toy_registry({"key", "noise"});
  auto groups = separable_groups(100, 4);
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i].ground_truth = static_cast<int>(i % 2);
  const auto clf = train(groups, reg, Channel::kWeb, small_params(0), 7);
  const auto p = predict(clf, groups[0], reg);
  EXPECT_DOUBLE_EQ(p.score, 0.5);
  EXPECT_EQ(p.label, 1);
}

TEST(Classifier, AllMissingRowStillScores) {
  const auto reg = testing::toy_registry({"key", "noise"});
  const auto groups = separable_groups(100, 5);
  const auto clf = train(groups, reg, Channel::kWeb, small_params(5), 7);
  FingerprintGroup empty;
  empty.config = testing::web_config();
  const auto p = predict(clf, empty, reg);
  EXPECT_GE(p.score, 0.0);
  EXPECT_LE(p.score, 1.0);
}

TEST(Classifier, ErrorsAreTyped) {
  const auto reg = testing::toy_registry({"key", "noise"});
  auto groups = separable_groups(50, 6);
  auto expect_code = [&](const std::vector<FingerprintGroup>& g, Channel ch, ErrorCode code) {
    try {
      train(g, reg, ch, small_params(1), 7);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code);
    }
  };
  expect_code(groups, Channel::kApp, ErrorCode::kChannelMismatch);
  auto single = groups;
  for (auto& g : single) g.ground_truth = 1;
  expect_code(single, Channel::kWeb, ErrorCode::kSingleClass);
  auto few = groups;
  for (auto& g : few) g.ground_truth = 1;
  few[0].ground_truth = 0;
  few[1].ground_truth = 0;
  expect_code(few, Channel::kWeb, ErrorCode::kFoldTooSmall);
  expect_code({}, Channel::kWeb, ErrorCode::kEmptyInput);
}

TEST(Classifier, SaveLoadPreservesPredictions) {
  const auto reg = testing::toy_registry({"key", "noise"});
  const auto groups = separable_groups(120, 7);
  const auto clf = train(groups, reg, Channel::kWeb, small_params(8), 7);
  const auto path = (testing::scratch_dir("model") / "model.json").string();
  save_classifier(clf, path);
  const auto back = load_classifier(path);
  EXPECT_EQ(back.channel, clf.channel);
  EXPECT_EQ(back.seed, clf.seed);
  ASSERT_EQ(back.cv_metrics.size(), clf.cv_metrics.size());
  for (const auto& g : groups) {
    EXPECT_EQ(predict(back, g, reg).score, predict(clf, g, reg).score);
  }
  EXPECT_THROW(load_classifier(path + ".missing"), Error);
}

TEST(Classifier, FixedSeedIsReproducible) {
  const auto reg = testing::toy_registry({"key", "noise"});
  const auto groups = separable_groups(150, 8);
  const auto a = train(groups, reg, Channel::kWeb, small_params(6), 11);
  const auto b = train(groups, reg, Channel::kWeb, small_params(6), 11);
  EXPECT_EQ(a.oof_scores, b.oof_scores);
  EXPECT_EQ(a.fold_of, b.fold_of);
}

TEST(Classifier, ParamsJsonRoundTrip) {
  auto p = small_params(12);
  p.knn_k = 3;
  p.decision_threshold = 0.4;
  const auto back =
      classifier_params_from_json(nlohmann::json::parse(classifier_params_to_json(p).dump()));
  EXPECT_EQ(back.gbdt.n_rounds, 12);
  EXPECT_EQ(back.gbdt.max_depth, 3);
  EXPECT_EQ(back.knn_k, 3u);
  EXPECT_EQ(back.decision_threshold, 0.4);
}

}  // namespace
}  // namespace adfp
