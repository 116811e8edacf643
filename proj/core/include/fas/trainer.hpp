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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fas/dataio.hpp"
#include "fas/sequence_model.hpp"

namespace fas {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  /// Training iterations (mini-batches) between validation passes.
  std::size_t validation_frequency = 30;
  /// Consecutive non-improving validation checks tolerated before stopping.
  std::size_t patience = 5;
  /// Safety cap; early stopping is the primary criterion.
  std::size_t max_epochs = 100;
  /// A check "improves" only if it beats the best loss by more than this.
  double min_improvement = 1e-6;
  std::uint64_t seed = 0;
  /// Rescale the mini-batch gradient when its global L2 norm exceeds this.
  std::optional<double> max_gradient_norm;
  AdamHyperParams adam;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws InvalidInput when a count is zero or the learning rate is not positive.
void validate(const TrainConfig& config);

enum class StopReason { EarlyStop, MaxEpochs };

std::string_view to_string(StopReason reason);

struct ValidationCheck {
  /// 1-based iteration after which the check ran.
  std::size_t iteration = 0;
  double loss = 0.0;
  double accuracy = 0.0;

  bool operator==(const ValidationCheck&) const = default;
};

struct TrainHistory {
  /// Mean mini-batch loss; entry i belongs to iteration i + 1.
  std::vector<double> iteration_loss;
  std::vector<ValidationCheck> checks;
  StopReason stop_reason = StopReason::MaxEpochs;
  /// Check with the lowest validation loss; the returned model is its snapshot.
  std::size_t best_check_index = 0;

  bool operator==(const TrainHistory&) const = default;
};

/// True iff the last `patience` losses all failed to beat the running best by
/// more than `min_improvement`.
bool early_stop_check(std::span<const double> validation_losses, std::size_t patience,
                      double min_improvement = 1e-6);
bool early_stop_check(const TrainHistory& history, std::size_t patience,
                      double min_improvement = 1e-6);

struct TrainResult {
  SequenceModel<float> model;
  TrainHistory history;
};

/// Mini-batch Adam on mean cross-entropy with validation-driven early stopping.
///
/// Epoch e visits train_set in the order permutation(n, RngStream(derive_seed(seed, e))).
/// Validation runs every `validation_frequency` iterations and once more after
/// the final iteration if that one was not already checked. Deterministic
/// given the config.
///
/// Throws InvalidInput for empty sets or dim mismatches and NumericalError
/// (with the iteration number) if the training loss diverges.
TrainResult train(SequenceModel<float> model, std::span<const FeatureSequence> train_set,
                  std::span<const FeatureSequence> val_set, const TrainConfig& config);

struct LossStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and accuracy (attack iff p_attack >= 0.5).
LossStats evaluate_loss(const SequenceModel<float>& model, std::span<const FeatureSequence> set);

/// Tab-separated rows: model, iteration, loss, val_loss, val_acc. Validation
/// columns read "-" on iterations without a check. Writes a header when asked.
void write_history(std::ostream& out, std::string_view model_name, const TrainHistory& history,
                   bool header = true);

}  // namespace fas
