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

#include "fas/trainer.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "fas/error.hpp"
#include "fas/rng.hpp"
#include "text.hpp"

namespace fas {
namespace {

void check_dims(const SequenceModel<float>& model, std::span<const FeatureSequence> set,
                std::string_view what) {
  if (set.empty()) {
    throw InvalidInput("train: " + std::string(what) + " set is empty");
  }
  for (const auto& seq : set) {
    if (seq.dim() != model.input_dim()) {
      throw InvalidInput("train: " + std::string(what) + " sequence '" + seq.video_id +
                         "' has dim " + std::to_string(seq.dim()) + ", model expects " +
                         std::to_string(model.input_dim()));
    }
  }
}

double global_norm(const ParameterSet<float>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.cast<double>().squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) {
    throw InvalidInput("train config: learning_rate must be > 0");
  }
  if (config.batch_size == 0 || config.validation_frequency == 0 || config.patience == 0 ||
      config.max_epochs == 0) {
    throw InvalidInput("train config: batch_size, validation_frequency, patience and max_epochs "
                       "must be >= 1");
  }
  if (config.max_gradient_norm && !(*config.max_gradient_norm > 0.0)) {
    throw InvalidInput("train config: max_gradient_norm must be > 0");
  }
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::EarlyStop ? "early_stop" : "max_epochs";
}

bool early_stop_check(std::span<const double> validation_losses, std::size_t patience,
                      double min_improvement) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  for (const double loss : validation_losses) {
    if (loss < best - min_improvement) {
      best = loss;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
  }
  return !validation_losses.empty() && since_improvement >= patience;
}

bool early_stop_check(const TrainHistory& history, std::size_t patience, double min_improvement) {
  std::vector<double> losses;
  losses.reserve(history.checks.size());
  for (const auto& c : history.checks) losses.push_back(c.loss);
  return early_stop_check(losses, patience, min_improvement);
}

LossStats evaluate_loss(const SequenceModel<float>& model, std::span<const FeatureSequence> set) {
  LossStats stats;
  if (set.empty()) return stats;
  std::size_t correct = 0;
  for (const auto& seq : set) {
    const auto p = predict_proba(model, seq.values);
    stats.loss += loss(p, seq.label);
    const Label predicted = p.p_attack >= 0.5 ? Label::Attack : Label::Live;
    correct += predicted == seq.label ? 1 : 0;
  }
  stats.loss /= static_cast<double>(set.size());
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return stats;
}

TrainResult train(SequenceModel<float> model, std::span<const FeatureSequence> train_set,
                  std::span<const FeatureSequence> val_set, const TrainConfig& config) {
  validate(config);
  check_dims(model, train_set, "training");
  check_dims(model, val_set, "validation");

  std::vector<AdamState<float>> optimizer;
  for (const auto& p : model.params()) {
    optimizer.push_back(AdamState<float>::zeros_like(p, config.adam));
  }
  const auto names = model.param_names();

  TrainHistory history;
  ParameterSet<float> best_params = model.params();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t iteration = 0;
  std::size_t last_checked = 0;

  auto run_check = [&] {
    const LossStats stats = evaluate_loss(model, val_set);
    history.checks.push_back({iteration, stats.loss, stats.accuracy});
    last_checked = iteration;
    // Snapshot on any strict improvement; min_improvement only gates patience.
    if (stats.loss < best_loss) {
      best_loss = stats.loss;
      best_params = model.params();
      history.best_check_index = history.checks.size() - 1;
    }
  };

  const std::size_t n = train_set.size();
  bool stopped = false;
  for (std::size_t epoch = 0; epoch < config.max_epochs && !stopped; ++epoch) {
    RngStream rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    const auto order = permutation(n, rng);
    for (std::size_t start = 0; start < n && !stopped; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      ParameterSet<float> grads = model.zero_gradients();
      double batch_loss = 0.0;
      ++iteration;
      try {
        for (std::size_t k = start; k < end; ++k) {
          const auto& seq = train_set[order[k]];
          auto result = backward(model, seq.values, seq.label);
          batch_loss += result.loss;
          for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += result.gradients[i];
        }
      } catch (const NumericalError& e) {
        throw NumericalError("train: training diverged at iteration " + std::to_string(iteration) +
                             ": " + e.what());
      }
      const float scale = 1.0f / static_cast<float>(end - start);
      for (auto& g : grads) g *= scale;
      batch_loss /= static_cast<double>(end - start);

      if (!std::isfinite(batch_loss)) {
        throw NumericalError("train: training loss diverged at iteration " +
                             std::to_string(iteration));
      }
      history.iteration_loss.push_back(batch_loss);

      if (config.max_gradient_norm) {
        const double norm = global_norm(grads);
        if (norm > *config.max_gradient_norm) {
          const float clip = static_cast<float>(*config.max_gradient_norm / norm);
          for (auto& g : grads) g *= clip;
        }
      }
      for (std::size_t i = 0; i < grads.size(); ++i) {
        adam_step(model.params()[i], grads[i], optimizer[i], config.learning_rate, names[i]);
      }

      if (iteration % config.validation_frequency == 0) {
        run_check();
        if (early_stop_check(history, config.patience, config.min_improvement)) {
          history.stop_reason = StopReason::EarlyStop;
          stopped = true;
        }
      }
    }
  }
  if (last_checked != iteration) {
    run_check();
  }

  model.params() = std::move(best_params);
  return {std::move(model), std::move(history)};
}

void write_history(std::ostream& out, std::string_view model_name, const TrainHistory& history,
                   bool header) {
  if (header) {
    out << "model\titeration\tloss\tval_loss\tval_acc\n";
  }
  std::size_t next_check = 0;
  for (std::size_t i = 0; i < history.iteration_loss.size(); ++i) {
    const std::size_t iteration = i + 1;
    out << model_name << '\t' << iteration << '\t'
        << detail::format_double(history.iteration_loss[i]);
    if (next_check < history.checks.size() && history.checks[next_check].iteration == iteration) {
      const auto& c = history.checks[next_check++];
      out << '\t' << detail::format_double(c.loss) << '\t' << detail::format_double(c.accuracy);
    } else {
      out << "\t-\t-";
    }
    out << '\n';
  }
}

}  // namespace fas
