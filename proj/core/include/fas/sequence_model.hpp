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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fas/label.hpp"
#include "fas/numerics.hpp"

namespace fas {

/// Recurrent sequence classifiers with a dense two-way softmax head.
///
/// Notation: x_t input frame, h_t hidden state, s = logistic sigmoid, (.) elementwise.
///
/// LSTM, gate rows stacked as [input i | forget f | output o | candidate g]:
///   i = s(W_i x + U_i h' + b_i)      f = s(W_f x + U_f h' + b_f)
///   o = s(W_o x + U_o h' + b_o)      g = tanh(W_g x + U_g h' + b_g)
///   c = f (.) c' + i (.) g           h = o (.) tanh(c)
///
/// GRU, gate rows stacked as [update z | reset r | candidate n]:
///   z = s(W_z x + U_z h' + b_z)      r = s(W_r x + U_r h' + b_r)
///   n = tanh(W_n x + U_n (r (.) h') + b_n)
///   h = z (.) h' + (1 - z) (.) n
///
/// BiLSTM runs one LSTM over x_1..x_T and an independent one over x_T..x_1.
///
/// Head: logits = W_head r + b_head, p = softmax(logits), class 0 = live, 1 = attack,
/// where r is the last hidden state (LSTM, GRU) or [h_fwd(T); h_bwd(1)] (BiLSTM).
/// Initial h and c are zero.
enum class CellKind : std::uint8_t { Lstm = 0, BiLstm = 1, Gru = 2 };

std::string_view to_string(CellKind kind);
std::optional<CellKind> parse_cell_kind(std::string_view text);

struct ClassProbabilities {
  double p_live = 0.5;
  double p_attack = 0.5;

  double of(Label label) const { return label == Label::Live ? p_live : p_attack; }
};

/// Same layout as SequenceModel::params().
template <typename T>
using ParameterSet = std::vector<Matrix<T>>;

template <typename T>
class SequenceModel {
 public:
  /// All parameters zero.
  SequenceModel(CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim);

  /// He-normal weights (fan_in = input width of each matrix), zero biases.
  static SequenceModel initialized(CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim,
                                   RngStream& rng);

  CellKind kind() const noexcept { return kind_; }
  Eigen::Index input_dim() const noexcept { return input_dim_; }
  Eigen::Index hidden_dim() const noexcept { return hidden_dim_; }
  /// Width of the vector fed to the head (2 * hidden for BiLSTM).
  Eigen::Index representation_dim() const noexcept {
    return kind_ == CellKind::BiLstm ? 2 * hidden_dim_ : hidden_dim_;
  }

  /// Parameter layout:
  ///   LSTM:   lstm.W (4H x D), lstm.U (4H x H), lstm.b (4H x 1), head.W (2 x H), head.b (2 x 1)
  ///   BiLSTM: fwd.W, fwd.U, fwd.b, bwd.W, bwd.U, bwd.b (LSTM shapes), head.W (2 x 2H), head.b
  ///   GRU:    gru.W (3H x D), gru.U (3H x H), gru.b (3H x 1), head.W (2 x H), head.b
  ParameterSet<T>& params() noexcept { return params_; }
  const ParameterSet<T>& params() const noexcept { return params_; }
  std::span<const std::string> param_names() const;

  Matrix<T>& param(std::string_view name);
  const Matrix<T>& param(std::string_view name) const;

  std::size_t parameter_count() const;

  /// Zero-filled parameter set with this model's shapes.
  ParameterSet<T> zero_gradients() const;

  template <typename U>
  SequenceModel<U> cast() const {
    SequenceModel<U> out(kind_, input_dim_, hidden_dim_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.params()[i] = params_[i].template cast<U>();
    }
    return out;
  }

  bool operator==(const SequenceModel& other) const;

 private:
  CellKind kind_;
  Eigen::Index input_dim_;
  Eigen::Index hidden_dim_;
  ParameterSet<T> params_;
};

template <typename T>
struct ForwardResult {
  /// T x H; row t is the (forward-direction) hidden state after frame t.
  Matrix<T> hidden;
  /// BiLSTM only: row t is the backward-direction state after it has consumed frames T-1..t.
  Matrix<T> backward_hidden;
  Vector<T> representation;
  Vector<T> logits;
  ClassProbabilities probabilities;
};

template <typename T>
struct BackwardResult {
  ParameterSet<T> gradients;
  double loss = 0.0;
  ClassProbabilities probabilities;
};

/// `frames` is (sequence length x input_dim), one row per selected video frame.
/// Throws InvalidInput on dimension mismatch or an empty sequence.
template <typename T>
ForwardResult<T> forward(const SequenceModel<T>& model, const Matrix<T>& frames);

template <typename T>
ClassProbabilities predict_proba(const SequenceModel<T>& model, const Matrix<T>& frames) {
  return forward(model, frames).probabilities;
}

/// Cross-entropy of the true class, -ln(max(p_true, 1e-12)).
double loss(const ClassProbabilities& probabilities, Label label);

/// Exact gradients of loss(forward(model, frames), label) by backpropagation
/// through time. Throws NumericalError naming the time step if a non-finite
/// value appears.
template <typename T>
BackwardResult<T> backward(const SequenceModel<T>& model, const Matrix<T>& frames, Label label);

template <typename T>
struct LstmState {
  Vector<T> hidden;
  Vector<T> cell;
};

/// Single LSTM cell update with the stacked [i|f|o|g] parameters.
template <typename T>
LstmState<T> lstm_step(const Matrix<T>& input_weights, const Matrix<T>& recurrent_weights,
                       const Matrix<T>& bias, const Vector<T>& input, const LstmState<T>& prev);

/// Single GRU cell update with the stacked [z|r|n] parameters.
template <typename T>
Vector<T> gru_step(const Matrix<T>& input_weights, const Matrix<T>& recurrent_weights,
                   const Matrix<T>& bias, const Vector<T>& input, const Vector<T>& prev_hidden);

}  // namespace fas
