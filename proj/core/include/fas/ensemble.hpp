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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fas/dataio.hpp"
#include "fas/sequence_model.hpp"
#include "fas/trainer.hpp"

namespace fas {

/// How the three base predictions become one attack score.
enum class Combiner : std::uint8_t {
  /// LSTM meta-model over the stacked base probabilities.
  Meta = 0,
  /// Mean of the three base p_attack values.
  Sum = 1,
};

std::string_view to_string(Combiner combiner);
std::optional<Combiner> parse_combiner(std::string_view text);

/// Base models, in their fixed stacking order.
inline constexpr std::array<CellKind, 3> kBaseOrder = {CellKind::Lstm, CellKind::BiLstm,
                                                       CellKind::Gru};

struct EnsembleConfig {
  Eigen::Index lstm_hidden = 1000;
  Eigen::Index bilstm_hidden = 500;
  Eigen::Index gru_hidden = 20;
  Eigen::Index meta_hidden = 20;
  std::size_t meta_max_epochs = 100;
  /// Share of the training pool held out to produce meta-model training data.
  double stacking_split_fraction = 0.25;
  /// Shared by all four models; `base.seed` is ignored in favor of per-model
  /// seeds derived from `seed`.
  TrainConfig base;
  std::uint64_t seed = 0;
  Combiner combiner = Combiner::Meta;
  /// Z-score features with statistics of the training pool.
  bool zscore = false;

  bool operator==(const EnsembleConfig&) const = default;
};

void validate(const EnsembleConfig& config);

struct EnsembleModel {
  /// Exactly three, in kBaseOrder.
  std::vector<SequenceModel<float>> base_models;
  /// LSTM with input_dim 2, run over a 3-step sequence of base probabilities.
  SequenceModel<float> meta_model{CellKind::Lstm, 2, 1};
  EnsembleConfig config;
  /// Empty unless config.zscore.
  FeatureNormalizer normalizer;

  Eigen::Index input_dim() const { return base_models.at(0).input_dim(); }
};

/// Meta-model input: row i = (p_live, p_attack) of base model i.
Matrix<float> meta_features(std::span<const ClassProbabilities> base_probabilities);

/// Runs each base model over `frames` (already normalized) in order.
/// Throws InvalidInput on dimension mismatch.
Matrix<float> build_meta_features(std::span<const SequenceModel<float>> base_models,
                                  const Matrix<float>& frames);

struct EnsembleTrainResult {
  EnsembleModel model;
  /// LSTM, BiLSTM, GRU, meta.
  std::array<TrainHistory, 4> histories;
  /// Indices into the training pool.
  Split stacking_split;
};

/// Stacked generalization:
///   1. split train_set (stratified, seeded) into a base part and a stacking part;
///   2. train LSTM, BiLSTM and GRU on the base part (val_set for early stopping);
///   3. stack their probabilities on the stacking part;
///   4. train the meta LSTM on those, capped at meta_max_epochs.
/// Errors from a base model's training are rethrown with its name prefixed.
EnsembleTrainResult train_ensemble(std::span<const FeatureSequence> train_set,
                                   std::span<const FeatureSequence> val_set,
                                   const EnsembleConfig& config);

/// Attack score in [0, 1] using the model's combiner unless overridden.
double predict(const EnsembleModel& ensemble, const FeatureSequence& sequence,
               std::optional<Combiner> combiner = std::nullopt);

/// Zero-parameter ensemble (every prediction is 0.5); handy as a chance baseline.
EnsembleModel zero_ensemble(Eigen::Index input_dim, const EnsembleConfig& config);

// Ensemble container, little-endian:
//
//   "FENS"              magic
//   version             u32 (= kEnsembleFormatVersion)
//   manifest            u32 length + UTF-8 `key=value` lines: format_version,
//                       order (LSTM,BILSTM,GRU,META), combiner and the config
//   normalizer          u8 flag; if 1: dim u32, dim x f32 mean, dim x f32 inv_std
//   models              4 x (u32 length + model container) in manifest order
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

std::string encode_ensemble(const EnsembleModel& ensemble);
EnsembleModel decode_ensemble(std::string_view bytes);

void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace fas
