/*
 * Copyright 2026 The fas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fas/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fas/ensemble.hpp"
#include "fas/error.hpp"
#include "support/test_support.hpp"

namespace fas {
namespace {

using testing::make_scores;

struct Point {
  double fpr, tpr;
};

// Every distinct score as a threshold, highest first, preceded by +inf.
std::vector<Point> brute_roc(const ScoreSet& s) {
  std::set<double, std::greater<>> thresholds;
  for (const auto& e : s.entries) thresholds.insert(e.score);
  std::vector<Point> out = {{0.0, 0.0}};
  const auto n_live = static_cast<double>(s.count(Label::Live));
  const auto n_attack = static_cast<double>(s.count(Label::Attack));
  for (const double t : thresholds) {
    double fp = 0, tp = 0;
    for (const auto& e : s.entries) {
      if (e.score >= t) (e.label == Label::Live ? fp : tp) += 1;
    }
    out.push_back({fp / n_live, tp / n_attack});
  }
  return out;
}

void expect_roc(const RocCurve& curve, const std::vector<Point>& points, double tol = 0.0) {
  ASSERT_EQ(curve.size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_NEAR(curve.fpr[i], points[i].fpr, tol) << "point " << i;
    EXPECT_NEAR(curve.tpr[i], points[i].tpr, tol) << "point " << i;
  }
}

TEST(Roc, PerfectSeparation) {
  const auto curve = roc_curve(make_scores({0.1, 0.2}, {0.8, 0.9}));
  expect_roc(curve, {{0, 0}, {0, 0.5}, {0, 1}, {0.5, 1}, {1, 1}});
  EXPECT_TRUE(std::isinf(curve.thresholds.front()));
  EXPECT_EQ(auc(curve), 1.0);
}

TEST(Roc, AllTied) {
  const auto curve = roc_curve(make_scores({0.3, 0.3, 0.3}, {0.3, 0.3}));
  expect_roc(curve, {{0, 0}, {1, 1}});
  EXPECT_EQ(auc(curve), 0.5);
}

TEST(Roc, InterleavedMatchesEnumeration) {
  const auto s = make_scores({0.4, 0.6}, {0.5, 0.7});
  const auto curve = roc_curve(s);
  expect_roc(curve, brute_roc(s));
  EXPECT_EQ(curve.size(), 5u);
  EXPECT_DOUBLE_EQ(auc(curve), 0.75);
}

TEST(Roc, SingleClassRejected) {
  EXPECT_THROW(roc_curve(make_scores({0.1, 0.2}, {})), InvalidInput);
  EXPECT_THROW(eer(make_scores({}, {0.1})), InvalidInput);
  EXPECT_THROW(hter(make_scores({0.1}, {}), 0.5), InvalidInput);
}

TEST(Roc, NonFiniteScoreRejected) {
  EXPECT_THROW(roc_curve(make_scores({0.1, std::nan("")}, {0.5})), InvalidInput);
}

TEST(Auc, ReversedSeparation) {
  EXPECT_EQ(auc(roc_curve(make_scores({0.8, 0.9}, {0.1, 0.2}))), 0.0);
}

TEST(Auc, RandomScoresNearHalf) {
  RngStream rng(42);
  std::vector<double> live(5000), attack(5000);
  for (auto& x : live) x = rng.uniform01();
  for (auto& x : attack) x = rng.uniform01();
  EXPECT_NEAR(auc(roc_curve(make_scores(live, attack))), 0.5, 0.02);
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = testing::random_score_set(rng, 60);
    const double before = auc(roc_curve(s));
    for (auto& e : s.entries) e.score = std::exp(3.0 * e.score) - 7.0;
    EXPECT_NEAR(auc(roc_curve(s)), before, 1e-12);
  }
}

TEST(Eer, PerfectSeparation) {
  const auto r = eer(make_scores({0.1, 0.2}, {0.8, 0.9}));
  EXPECT_EQ(r.eer, 0.0);
  EXPECT_GT(r.threshold, 0.2);
  EXPECT_LT(r.threshold, 0.8);
  EXPECT_FALSE(r.inverted_ordering);
}

TEST(Eer, OverlappingPairs) {
  // Candidates 0.1, 0.25, 0.5, 0.75, nextafter(0.9) give (FAR, FRR) of
  // (0,1) (0,.5) (.5,.5) (.5,0) (1,0); only 0.5 balances the two.
  const auto r = eer(make_scores({0.1, 0.6}, {0.4, 0.9}));
  EXPECT_DOUBLE_EQ(r.threshold, 0.5);
  EXPECT_DOUBLE_EQ(r.far, 0.5);
  EXPECT_DOUBLE_EQ(r.frr, 0.5);
  EXPECT_DOUBLE_EQ(r.eer, 0.5);
}

TEST(Eer, FlippedLabelsFlagged) {
  const auto r = eer(make_scores({0.8, 0.9}, {0.1, 0.2}));
  EXPECT_GE(r.eer, 0.5);
  EXPECT_DOUBLE_EQ(r.eer, 1.0);
  EXPECT_TRUE(r.inverted_ordering);
}

TEST(Hter, PerfectSeparation) {
  const auto r = hter(make_scores({0.1, 0.2}, {0.8, 0.9}), 0.5);
  EXPECT_EQ(r.hter, 0.0);
}

TEST(Hter, ThresholdBelowAllScores) {
  const auto r = hter(make_scores({0.1, 0.2}, {0.8, 0.9}), 0.0);
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 1.0);
  EXPECT_EQ(r.hter, 0.5);
}

TEST(Hter, HandEnumeration) {
  const auto r = hter(make_scores({0.1, 0.6}, {0.4, 0.9}), 0.5);
  EXPECT_EQ(r.far, 0.5);
  EXPECT_EQ(r.frr, 0.5);
  EXPECT_EQ(r.hter, 0.5);
}

TEST(Hter, ScoreAtThresholdCountsAsAttack) {
  const auto r = hter(make_scores({0.5}, {0.5}), 0.5);
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 1.0);
}

TEST(Hter, RatesMonotoneInThreshold) {
  RngStream rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testing::random_score_set(rng, 40);
    ErrorRates prev = hter(s, -1.0);
    for (double t = -0.9; t <= 2.0; t += 0.05) {
      const auto r = hter(s, t);
      ASSERT_GE(r.far, prev.far);
      ASSERT_LE(r.frr, prev.frr);
      prev = r;
    }
  }
}

TEST(Metrics, MatchExhaustiveOracle) {
  RngStream rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_score_set(rng, 50);
    const auto curve = roc_curve(s);
    expect_roc(curve, brute_roc(s), 1e-12);
    ASSERT_NEAR(auc(curve), testing::brute_auc(s), 1e-9) << "trial " << trial;
    const auto e = eer(s);
    const auto ref = testing::brute_eer(s);
    ASSERT_NEAR(e.eer, ref.eer, 1e-9) << "trial " << trial;
    ASSERT_NEAR(e.threshold, ref.threshold, 1e-9) << "trial " << trial;
    for (const double t : {e.threshold, rng.uniform(-0.2, 1.2)}) {
      const auto r = hter(s, t);
      const auto b = testing::brute_rates(s, t);
      ASSERT_NEAR(r.far, b.far, 1e-9);
      ASSERT_NEAR(r.frr, b.frr, 1e-9);
      ASSERT_NEAR(r.hter, (b.far + b.frr) / 2, 1e-9);
    }
  }
}

TEST(Protocol, SameDistributionTargetTracksSourceEer) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream rng(seed);
    auto draw = [&](std::size_t n, double mean) {
      std::vector<double> v(n);
      for (auto& x : v) x = rng.normal(mean, 1.0);
      return v;
    };
    const auto source = make_scores(draw(500, 0.0), draw(500, 1.5));
    const auto target = make_scores(draw(500, 0.0), draw(500, 1.5));
    const auto report = evaluate_protocol(source, target);
    EXPECT_NEAR(report.hter, report.eer, 0.05) << "seed " << seed;
  }
}

TEST(Protocol, ReportFields) {
  const auto source = make_scores({0.1, 0.2, 0.3}, {0.7, 0.8});
  const auto target = make_scores({0.1, 0.6}, {0.4, 0.9});
  const auto r = evaluate_protocol(source, target);
  EXPECT_EQ(r.source_videos, 5u);
  EXPECT_EQ(r.target_videos, 4u);
  EXPECT_EQ(r.eer, 0.0);
  EXPECT_DOUBLE_EQ(r.eer_threshold, 0.5);
  EXPECT_EQ(r.far, 0.5);
  EXPECT_EQ(r.frr, 0.5);
  EXPECT_EQ(r.hter, 0.5);
  EXPECT_DOUBLE_EQ(r.auc, 0.75);
  EXPECT_FALSE(r.inverted_source_ordering);
}

TEST(Protocol, MonotoneShiftedTargetKeepsAuc) {
  RngStream rng(4);
  const auto source = testing::random_score_set(rng, 50);
  auto target = testing::random_score_set(rng, 50);
  const double base = evaluate_protocol(source, target).auc;
  for (auto& e : target.entries) e.score = 0.5 * e.score + 0.2;
  EXPECT_NEAR(evaluate_protocol(source, target).auc, base, 1e-12);
}

TEST(Protocol, ConstantScorerIsChance) {
  EnsembleConfig cfg;
  cfg.lstm_hidden = cfg.bilstm_hidden = cfg.gru_hidden = cfg.meta_hidden = 2;
  const auto model = zero_ensemble(3, cfg);
  RngStream rng(1);
  std::vector<FeatureSequence> source, target;
  for (int i = 0; i < 20; ++i) {
    auto seq = testing::random_sequence(rng, 3, 3, "v" + std::to_string(i));
    seq.label = i % 2 == 0 ? Label::Live : Label::Attack;
    (i < 10 ? source : target).push_back(seq);
  }
  const auto r = cross_dataset_eval(model, source, target);
  EXPECT_EQ(r.hter, 0.5);
  EXPECT_EQ(r.auc, 0.5);
}

TEST(Report, FormatParseRoundTrip) {
  auto r = evaluate_protocol(make_scores({0.1, 0.2, 0.35}, {0.7, 0.8}),
                             make_scores({0.1, 0.6}, {0.4, 0.9}));
  r.protocol = "OCI_to_M";
  r.source = "O+C+I";
  r.target = "M";
  const auto text = format_report(r);
  EXPECT_NE(text.find("hter: 0.5\n"), std::string::npos) << text;
  EXPECT_NE(text.find("protocol: OCI_to_M\n"), std::string::npos);
  const auto parsed = parse_report(text);
  EXPECT_EQ(parsed.protocol, r.protocol);
  EXPECT_EQ(parsed.hter, r.hter);
  EXPECT_EQ(parsed.eer_threshold, r.eer_threshold);
  EXPECT_EQ(parsed.auc, r.auc);
  EXPECT_EQ(parsed.roc.fpr, r.roc.fpr);
  EXPECT_EQ(parsed.roc.tpr, r.roc.tpr);
  EXPECT_EQ(format_report(parsed), text);
}

TEST(Report, MalformedRejected) {
  EXPECT_THROW(parse_report("protocol: x\n"), FormatError);
  EXPECT_THROW(parse_report("garbage"), FormatError);
}

TEST(Report, RocTable) {
  std::ostringstream out;
  write_roc_table(out, roc_curve(make_scores({0.1}, {0.9})));
  EXPECT_EQ(out.str(), "# fpr\ttpr\n0\t0\n0\t1\n1\t1\n");
}

}  // namespace
}  // namespace fas
