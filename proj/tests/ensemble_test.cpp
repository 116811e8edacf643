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

#include "fas/ensemble.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fas/error.hpp"
#include "fas/evaluation.hpp"
#include "fas/synthetic.hpp"
#include "support/test_support.hpp"

namespace fas {
namespace {

EnsembleConfig small_config(std::uint64_t seed = 42) {
  EnsembleConfig cfg;
  cfg.lstm_hidden = 32;
  cfg.bilstm_hidden = 16;
  cfg.gru_hidden = 8;
  cfg.meta_hidden = 8;
  cfg.base.learning_rate = 1e-3;
  cfg.seed = seed;
  return cfg;
}

std::vector<FeatureSequence> synthetic(std::size_t per_class, std::uint64_t seed, double separation = 5.0) {
  SyntheticSpec spec;
  spec.videos_per_class = per_class;
  spec.seed = seed;
  spec.separation = separation;
  return generate_synthetic(spec);
}

SequenceModel<float> constant_model(double p_live, Eigen::Index dim = 4) {
  SequenceModel<float> model(CellKind::Lstm, dim, 2);
  model.param("head.b")(0, 0) = static_cast<float>(std::log(p_live));
  model.param("head.b")(1, 0) = static_cast<float>(std::log(1.0 - p_live));
  return model;
}

double auc_of(const std::vector<FeatureSequence>& set, auto&& score) {
  ScoreSet s;
  for (const auto& seq : set) s.entries.push_back({seq.video_id, score(seq), seq.label});
  return auc(roc_curve(s));
}

struct TrainedEnsemble {
  std::vector<FeatureSequence> train_set;
  std::vector<FeatureSequence> val_set;
  EnsembleTrainResult result;
};

const TrainedEnsemble& trained(bool crippled) {
  auto make = [](bool cripple) {
    TrainedEnsemble t;
    SyntheticSpec spec;
    std::tie(t.train_set, t.val_set) = testing::synthetic_pools(spec, 200, 50);
    auto cfg = small_config();
    if (cripple) cfg.gru_hidden = 1;
    t.result = train_ensemble(t.train_set, t.val_set, cfg);
    return t;
  };
  if (crippled) {
    static const TrainedEnsemble c = make(true);
    return c;
  }
  static const TrainedEnsemble t = make(false);
  return t;
}

void expect_meta_competitive(const TrainedEnsemble& t) {
  const auto& model = t.result.model;
  double best_base = 0.0;
  for (const auto& base : model.base_models) {
    const double a = auc_of(t.val_set, [&](const FeatureSequence& s) {
      return predict_proba(base, s.values).p_attack;
    });
    best_base = std::max(best_base, a);
  }
  const double meta = auc_of(t.val_set, [&](const FeatureSequence& s) { return predict(model, s); });
  EXPECT_GE(meta, best_base - 0.02) << "meta " << meta << " best base " << best_base;
}

TEST(MetaFeatures, ZeroBaseModelsAreUniform) {
  const EnsembleModel e = zero_ensemble(4, small_config());
  const auto f = build_meta_features(e.base_models, Matrix<float>::Ones(3, 4));
  ASSERT_EQ(f.rows(), 3);
  ASSERT_EQ(f.cols(), 2);
  EXPECT_TRUE(f.isApprox(Matrix<float>::Constant(3, 2, 0.5f)));
}

TEST(MetaFeatures, PassThroughInOrder) {
  std::vector<SequenceModel<float>> models = {constant_model(0.9), constant_model(0.2),
                                              constant_model(0.6)};
  // Give each its documented kind while keeping the constant head.
  for (std::size_t i = 1; i < 3; ++i) {
    SequenceModel<float> m(kBaseOrder[i], 4, 2);
    m.param("head.b") = models[i].param("head.b");
    models[i] = m;
  }
  const auto f = build_meta_features(models, Matrix<float>::Zero(2, 4));
  Matrix<float> expected(3, 2);
  expected << 0.9f, 0.1f, 0.2f, 0.8f, 0.6f, 0.4f;
  EXPECT_TRUE(f.isApprox(expected, 1e-6f)) << f;
}

TEST(MetaFeatures, OrderIsEnforced) {
  std::vector<SequenceModel<float>> models = {SequenceModel<float>(CellKind::Gru, 4, 2),
                                              SequenceModel<float>(CellKind::BiLstm, 4, 2),
                                              SequenceModel<float>(CellKind::Lstm, 4, 2)};
  EXPECT_THROW(build_meta_features(models, Matrix<float>::Zero(2, 4)), InvalidInput);
  std::vector<ClassProbabilities> probs = {{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
  const auto f = meta_features(probs);
  std::swap(probs[0], probs[2]);
  EXPECT_NE(f, meta_features(probs));
}

TEST(MetaFeatures, DimensionMismatchRejected) {
  const EnsembleModel e = zero_ensemble(4, small_config());
  EXPECT_THROW(build_meta_features(e.base_models, Matrix<float>::Zero(2, 5)), InvalidInput);
}

TEST(Predict, ZeroMetaModelIsHalf) {
  const auto& t = trained(false);
  EnsembleModel e = t.result.model;
  for (auto& p : e.meta_model.params()) p.setZero();
  for (const auto& seq : t.val_set) EXPECT_EQ(predict(e, seq), 0.5);
  const EnsembleModel zero = zero_ensemble(16, small_config());
  for (const auto& seq : t.val_set) EXPECT_EQ(predict(zero, seq), 0.5);
}

TEST(Predict, ScoresInUnitInterval) {
  RngStream rng(5);
  const auto& model = trained(false).result.model;
  for (int trial = 0; trial < 200; ++trial) {
    const auto frames = 1 + static_cast<Eigen::Index>(rng.below(10));
    auto seq = testing::random_sequence(rng, frames, 16);
    seq.values *= static_cast<float>(rng.uniform(0.0, 50.0));
    const double score = predict(model, seq);
    ASSERT_GE(score, 0.0);
    ASSERT_LE(score, 1.0);
  }
}

TEST(Predict, DimensionMismatchRejected) {
  RngStream rng(5);
  const auto seq = testing::random_sequence(rng, 3, 8);
  EXPECT_THROW(predict(zero_ensemble(16, small_config()), seq), InvalidInput);
}

TEST(Predict, SumCombinerIsMeanAttackProbability) {
  const auto& t = trained(false);
  const auto& model = t.result.model;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& seq = t.val_set[i];
    double mean = 0.0;
    for (const auto& base : model.base_models) mean += predict_proba(base, seq.values).p_attack / 3.0;
    EXPECT_NEAR(predict(model, seq, Combiner::Sum), mean, 1e-6);
  }
}

TEST(TrainEnsemble, MetaModelCompetitiveWithBestBase) { expect_meta_competitive(trained(false)); }

TEST(TrainEnsemble, CrippledBaseModelDiscounted) {
  const auto& t = trained(true);
  EXPECT_EQ(t.result.model.base_models[2].hidden_dim(), 1);
  expect_meta_competitive(t);
}

TEST(TrainEnsemble, AttackScoresAboveLiveScores) {
  const auto& t = trained(false);
  double live = 0, attack = 0, n_live = 0, n_attack = 0;
  for (const auto& seq : t.val_set) {
    const double s = predict(t.result.model, seq);
    (seq.label == Label::Live ? live : attack) += s;
    (seq.label == Label::Live ? n_live : n_attack) += 1;
  }
  EXPECT_GT(attack / n_attack, live / n_live);
}

TEST(TrainEnsemble, StackingSplitPartitionsPool) {
  const auto& t = trained(false);
  const auto& split = t.result.stacking_split;
  std::set<std::size_t> kept(split.kept.begin(), split.kept.end());
  std::set<std::size_t> held(split.held_out.begin(), split.held_out.end());
  EXPECT_EQ(kept.size() + held.size(), t.train_set.size());
  for (const auto i : held) EXPECT_EQ(kept.count(i), 0u);
  EXPECT_EQ(held.size(), 100u);
  std::size_t held_live = 0;
  for (const auto i : held) held_live += t.train_set[i].label == Label::Live;
  EXPECT_EQ(held_live, 50u);
}

TEST(TrainEnsemble, HistoriesRecorded) {
  const auto& t = trained(false);
  for (const auto& h : t.result.histories) {
    EXPECT_FALSE(h.iteration_loss.empty());
    EXPECT_FALSE(h.checks.empty());
  }
}

TEST(TrainEnsemble, IdenticalSeedsSerializeIdentically) {
  SyntheticSpec spec;
  spec.seed = 1;
  const auto [train_set, val_set] = testing::synthetic_pools(spec, 20, 5);
  auto cfg = small_config(7);
  cfg.base.max_epochs = 3;
  cfg.meta_max_epochs = 3;
  const auto a = train_ensemble(train_set, val_set, cfg);
  const auto b = train_ensemble(train_set, val_set, cfg);
  EXPECT_EQ(encode_ensemble(a.model),
            encode_ensemble(b.model));
  cfg.seed = 8;
  const auto c = train_ensemble(train_set, val_set, cfg);
  EXPECT_NE(encode_ensemble(a.model), encode_ensemble(c.model));
}

TEST(TrainEnsemble, DimensionMismatchRejected) {
  auto train_set = synthetic(4, 1);
  RngStream rng(1);
  train_set.push_back(testing::random_sequence(rng, 3, 8, "odd"));
  EXPECT_THROW(train_ensemble(train_set, synthetic(2, 2), small_config()), InvalidInput);
}

TEST(Serialization, RoundTrip) {
  const auto& model = trained(false).result.model;
  const auto bytes = encode_ensemble(model);
  const auto decoded = decode_ensemble(bytes);
  EXPECT_EQ(decoded.config, model.config);
  EXPECT_EQ(decoded.meta_model, model.meta_model);
  ASSERT_EQ(decoded.base_models.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(decoded.base_models[i], model.base_models[i]);
  EXPECT_EQ(encode_ensemble(decoded), bytes);
}

TEST(Serialization, NormalizerRoundTrip) {
  auto cfg = small_config();
  cfg.zscore = true;
  EnsembleModel e = zero_ensemble(16, cfg);
  e.normalizer = FeatureNormalizer::fit(synthetic(5, 3));
  const auto decoded = decode_ensemble(encode_ensemble(e));
  EXPECT_EQ(decoded.normalizer, e.normalizer);
}

TEST(Serialization, FileRoundTrip) {
  testing::TempDir dir;
  const EnsembleModel e = zero_ensemble(6, small_config());
  save_ensemble(e, dir / "model.fens");
  EXPECT_EQ(encode_ensemble(load_ensemble(dir / "model.fens")), encode_ensemble(e));
  EXPECT_THROW(load_ensemble(dir / "missing.fens"), IoError);
}

TEST(Serialization, CorruptInputRejected) {
  const auto bytes = encode_ensemble(zero_ensemble(6, small_config()));
  EXPECT_THROW(decode_ensemble("XXXX" + bytes.substr(4)), FormatError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(decode_ensemble(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW(decode_ensemble(bytes + "x"), FormatError);
}

TEST(Config, Validation) {
  auto cfg = small_config();
  cfg.stacking_split_fraction = 1.0;
  EXPECT_THROW(validate(cfg), InvalidInput);
  cfg = small_config();
  cfg.gru_hidden = 0;
  EXPECT_THROW(validate(cfg), InvalidInput);
  EXPECT_NO_THROW(validate(EnsembleConfig{}));
}

}  // namespace
}  // namespace fas
