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

#include "fas/sequence_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fas/error.hpp"

namespace fas {
namespace {

const std::array<std::string, 5> kLstmNames = {"lstm.W", "lstm.U", "lstm.b", "head.W", "head.b"};
const std::array<std::string, 8> kBiLstmNames = {"fwd.W", "fwd.U", "fwd.b", "bwd.W",
                                                 "bwd.U", "bwd.b", "head.W", "head.b"};
const std::array<std::string, 5> kGruNames = {"gru.W", "gru.U", "gru.b", "head.W", "head.b"};

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
Vector<T> sigmoid(const Vector<T>& x) {
  return x.unaryExpr([](T v) { return sigmoid(v); });
}

template <typename T>
Vector<T> tanh(const Vector<T>& x) {
  return x.array().tanh().matrix();
}

template <typename T>
ClassProbabilities softmax2(const Vector<T>& logits) {
  const double a = static_cast<double>(logits(0));
  const double b = static_cast<double>(logits(1));
  const double m = std::max(a, b);
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  return {ea / (ea + eb), eb / (ea + eb)};
}

// Activations of one LSTM direction, stored in processing order.
template <typename T>
struct LstmTrace {
  Matrix<T> gates;  // steps x 4H, post-activation [i|f|o|g]
  Matrix<T> cells;
  Matrix<T> cells_tanh;
  Matrix<T> hidden;
};

Eigen::Index frame_at(Eigen::Index step, Eigen::Index steps, bool reverse) {
  return reverse ? steps - 1 - step : step;
}

template <typename T>
LstmTrace<T> run_lstm(const Matrix<T>& w, const Matrix<T>& u, const Matrix<T>& b,
                      const Matrix<T>& frames, bool reverse) {
  const Eigen::Index steps = frames.rows();
  const Eigen::Index h = u.cols();
  LstmTrace<T> trace{Matrix<T>(steps, 4 * h), Matrix<T>(steps, h), Matrix<T>(steps, h),
                     Matrix<T>(steps, h)};
  Vector<T> hidden = Vector<T>::Zero(h);
  Vector<T> cell = Vector<T>::Zero(h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Vector<T> x = frames.row(frame_at(s, steps, reverse)).transpose();
    const Vector<T> pre = w * x + u * hidden + b.col(0);
    const Vector<T> i = sigmoid<T>(pre.segment(0, h));
    const Vector<T> f = sigmoid<T>(pre.segment(h, h));
    const Vector<T> o = sigmoid<T>(pre.segment(2 * h, h));
    const Vector<T> g = tanh<T>(pre.segment(3 * h, h));
    cell = f.cwiseProduct(cell) + i.cwiseProduct(g);
    const Vector<T> cell_tanh = tanh<T>(cell);
    hidden = o.cwiseProduct(cell_tanh);
    trace.gates.row(s) << i.transpose(), f.transpose(), o.transpose(), g.transpose();
    trace.cells.row(s) = cell.transpose();
    trace.cells_tanh.row(s) = cell_tanh.transpose();
    trace.hidden.row(s) = hidden.transpose();
  }
  return trace;
}

// Accumulates into gw/gu/gb; `d_last` is dLoss/dh at the final processed step.
template <typename T>
void lstm_backward(const Matrix<T>& u, const Matrix<T>& frames, bool reverse,
                   const LstmTrace<T>& trace, const Vector<T>& d_last, Matrix<T>& gw,
                   Matrix<T>& gu, Matrix<T>& gb) {
  const Eigen::Index steps = frames.rows();
  const Eigen::Index h = u.cols();
  Vector<T> dh = d_last;
  Vector<T> dc = Vector<T>::Zero(h);
  Vector<T> d_pre(4 * h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const auto gates = trace.gates.row(s).transpose();
    const auto i = gates.segment(0, h);
    const auto f = gates.segment(h, h);
    const auto o = gates.segment(2 * h, h);
    const auto g = gates.segment(3 * h, h);
    const auto ct = trace.cells_tanh.row(s).transpose();
    const Vector<T> c_prev = s > 0 ? Vector<T>(trace.cells.row(s - 1).transpose())
                                   : Vector<T>::Zero(h);
    const Vector<T> h_prev = s > 0 ? Vector<T>(trace.hidden.row(s - 1).transpose())
                                   : Vector<T>::Zero(h);

    const Vector<T> d_o = dh.cwiseProduct(ct);
    dc += dh.cwiseProduct(o).cwiseProduct((T(1) - ct.array().square()).matrix());
    const Vector<T> d_i = dc.cwiseProduct(g);
    const Vector<T> d_g = dc.cwiseProduct(i);
    const Vector<T> d_f = dc.cwiseProduct(c_prev);

    d_pre.segment(0, h) = d_i.array() * i.array() * (T(1) - i.array());
    d_pre.segment(h, h) = d_f.array() * f.array() * (T(1) - f.array());
    d_pre.segment(2 * h, h) = d_o.array() * o.array() * (T(1) - o.array());
    d_pre.segment(3 * h, h) = d_g.array() * (T(1) - g.array().square());
    if (!d_pre.allFinite()) {
      throw NumericalError("backward: non-finite LSTM gradient at step " +
                           std::to_string(frame_at(s, steps, reverse)));
    }

    const auto x = frames.row(frame_at(s, steps, reverse));
    gw.noalias() += d_pre * x;
    gu.noalias() += d_pre * h_prev.transpose();
    gb.col(0) += d_pre;

    dh.noalias() = u.transpose() * d_pre;
    dc = dc.cwiseProduct(Vector<T>(f));
  }
}

template <typename T>
struct GruTrace {
  Matrix<T> update;     // z
  Matrix<T> reset;      // r
  Matrix<T> candidate;  // n
  Matrix<T> reset_hidden;  // r (.) h'
  Matrix<T> hidden;
};

template <typename T>
GruTrace<T> run_gru(const Matrix<T>& w, const Matrix<T>& u, const Matrix<T>& b,
                    const Matrix<T>& frames) {
  const Eigen::Index steps = frames.rows();
  const Eigen::Index h = u.cols();
  GruTrace<T> trace{Matrix<T>(steps, h), Matrix<T>(steps, h), Matrix<T>(steps, h),
                    Matrix<T>(steps, h), Matrix<T>(steps, h)};
  Vector<T> hidden = Vector<T>::Zero(h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Vector<T> x = frames.row(s).transpose();
    const Vector<T> wx = w * x + b.col(0);
    const Vector<T> z = sigmoid<T>(wx.segment(0, h) + u.topRows(h) * hidden);
    const Vector<T> r = sigmoid<T>(wx.segment(h, h) + u.middleRows(h, h) * hidden);
    const Vector<T> rh = r.cwiseProduct(hidden);
    const Vector<T> n = tanh<T>(wx.segment(2 * h, h) + u.bottomRows(h) * rh);
    hidden = z.cwiseProduct(hidden) + (Vector<T>::Ones(h) - z).cwiseProduct(n);
    trace.update.row(s) = z.transpose();
    trace.reset.row(s) = r.transpose();
    trace.candidate.row(s) = n.transpose();
    trace.reset_hidden.row(s) = rh.transpose();
    trace.hidden.row(s) = hidden.transpose();
  }
  return trace;
}

template <typename T>
void gru_backward(const Matrix<T>& u, const Matrix<T>& frames, const GruTrace<T>& trace,
                  const Vector<T>& d_last, Matrix<T>& gw, Matrix<T>& gu, Matrix<T>& gb) {
  const Eigen::Index steps = frames.rows();
  const Eigen::Index h = u.cols();
  Vector<T> dh = d_last;
  Vector<T> d_pre(3 * h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const auto z = trace.update.row(s).transpose();
    const auto r = trace.reset.row(s).transpose();
    const auto n = trace.candidate.row(s).transpose();
    const auto rh = trace.reset_hidden.row(s).transpose();
    const Vector<T> h_prev = s > 0 ? Vector<T>(trace.hidden.row(s - 1).transpose())
                                   : Vector<T>::Zero(h);

    const Vector<T> d_z = dh.cwiseProduct(h_prev - Vector<T>(n));
    const Vector<T> d_n = dh.array() * (T(1) - z.array());
    Vector<T> dh_prev = dh.cwiseProduct(Vector<T>(z));

    const Vector<T> d_pre_n = d_n.array() * (T(1) - n.array().square());
    const Vector<T> d_rh = u.bottomRows(h).transpose() * d_pre_n;
    const Vector<T> d_r = d_rh.cwiseProduct(h_prev);
    dh_prev += d_rh.cwiseProduct(Vector<T>(r));

    d_pre.segment(0, h) = d_z.array() * z.array() * (T(1) - z.array());
    d_pre.segment(h, h) = d_r.array() * r.array() * (T(1) - r.array());
    d_pre.segment(2 * h, h) = d_pre_n;
    if (!d_pre.allFinite()) {
      throw NumericalError("backward: non-finite GRU gradient at step " + std::to_string(s));
    }

    const auto x = frames.row(s);
    gw.noalias() += d_pre * x;
    gu.topRows(h).noalias() += d_pre.segment(0, h) * h_prev.transpose();
    gu.middleRows(h, h).noalias() += d_pre.segment(h, h) * h_prev.transpose();
    gu.bottomRows(h).noalias() += d_pre_n * rh.transpose();
    gb.col(0) += d_pre;

    dh_prev.noalias() += u.topRows(h).transpose() * d_pre.segment(0, h);
    dh_prev.noalias() += u.middleRows(h, h).transpose() * d_pre.segment(h, h);
    dh = dh_prev;
  }
}

template <typename T>
void check_input(const SequenceModel<T>& model, const Matrix<T>& frames) {
  if (frames.rows() < 1) {
    throw InvalidInput("sequence must contain at least one frame");
  }
  if (frames.cols() != model.input_dim()) {
    throw InvalidInput("feature dimension mismatch: model expects " +
                       std::to_string(model.input_dim()) + ", sequence has " +
                       std::to_string(frames.cols()));
  }
}

template <typename T>
void check_finite_hidden(const Matrix<T>& hidden) {
  for (Eigen::Index s = 0; s < hidden.rows(); ++s) {
    if (!hidden.row(s).allFinite()) {
      throw NumericalError("forward: non-finite hidden state at step " + std::to_string(s));
    }
  }
}

// Everything backward needs from the forward pass.
template <typename T>
struct FullTrace {
  LstmTrace<T> lstm_fwd;
  LstmTrace<T> lstm_bwd;
  GruTrace<T> gru;
  Vector<T> representation;
  Vector<T> logits;
  ClassProbabilities probabilities;
};

template <typename T>
FullTrace<T> run(const SequenceModel<T>& model, const Matrix<T>& frames) {
  check_input(model, frames);
  const auto& p = model.params();
  const Eigen::Index h = model.hidden_dim();
  const Eigen::Index last = frames.rows() - 1;
  FullTrace<T> out;
  out.representation.resize(model.representation_dim());
  switch (model.kind()) {
    case CellKind::Lstm:
      out.lstm_fwd = run_lstm(p[0], p[1], p[2], frames, false);
      check_finite_hidden(out.lstm_fwd.hidden);
      out.representation = out.lstm_fwd.hidden.row(last).transpose();
      break;
    case CellKind::BiLstm:
      out.lstm_fwd = run_lstm(p[0], p[1], p[2], frames, false);
      out.lstm_bwd = run_lstm(p[3], p[4], p[5], frames, true);
      check_finite_hidden(out.lstm_fwd.hidden);
      check_finite_hidden(out.lstm_bwd.hidden);
      out.representation.segment(0, h) = out.lstm_fwd.hidden.row(last).transpose();
      out.representation.segment(h, h) = out.lstm_bwd.hidden.row(last).transpose();
      break;
    case CellKind::Gru:
      out.gru = run_gru(p[0], p[1], p[2], frames);
      check_finite_hidden(out.gru.hidden);
      out.representation = out.gru.hidden.row(last).transpose();
      break;
  }
  const std::size_t head = p.size() - 2;
  out.logits = p[head] * out.representation + p[head + 1].col(0);
  out.probabilities = softmax2(out.logits);
  return out;
}

}  // namespace

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Lstm:
      return "LSTM";
    case CellKind::BiLstm:
      return "BILSTM";
    case CellKind::Gru:
      return "GRU";
  }
  return "?";
}

std::optional<CellKind> parse_cell_kind(std::string_view text) {
  if (text == "LSTM") return CellKind::Lstm;
  if (text == "BILSTM") return CellKind::BiLstm;
  if (text == "GRU") return CellKind::Gru;
  return std::nullopt;
}

template <typename T>
SequenceModel<T>::SequenceModel(CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim)
    : kind_(kind), input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw InvalidInput("SequenceModel: input_dim and hidden_dim must be >= 1");
  }
  const Eigen::Index d = input_dim;
  const Eigen::Index h = hidden_dim;
  auto zeros = [](Eigen::Index r, Eigen::Index c) { return Matrix<T>::Zero(r, c); };
  switch (kind) {
    case CellKind::Lstm:
      params_ = {zeros(4 * h, d), zeros(4 * h, h), zeros(4 * h, 1), zeros(2, h), zeros(2, 1)};
      break;
    case CellKind::BiLstm:
      params_ = {zeros(4 * h, d), zeros(4 * h, h), zeros(4 * h, 1), zeros(4 * h, d),
                 zeros(4 * h, h), zeros(4 * h, 1), zeros(2, 2 * h), zeros(2, 1)};
      break;
    case CellKind::Gru:
      params_ = {zeros(3 * h, d), zeros(3 * h, h), zeros(3 * h, 1), zeros(2, h), zeros(2, 1)};
      break;
    default:
      throw InvalidInput("SequenceModel: unknown cell kind");
  }
}

template <typename T>
SequenceModel<T> SequenceModel<T>::initialized(CellKind kind, Eigen::Index input_dim,
                                               Eigen::Index hidden_dim, RngStream& rng) {
  SequenceModel model(kind, input_dim, hidden_dim);
  for (auto& p : model.params_) {
    // Biases (single column) stay zero.
    if (p.cols() == 1) continue;
    p = he_init<T>(p.rows(), p.cols(), p.cols(), rng);
  }
  return model;
}

template <typename T>
std::span<const std::string> SequenceModel<T>::param_names() const {
  switch (kind_) {
    case CellKind::Lstm:
      return kLstmNames;
    case CellKind::BiLstm:
      return kBiLstmNames;
    case CellKind::Gru:
      return kGruNames;
  }
  return {};
}

template <typename T>
Matrix<T>& SequenceModel<T>::param(std::string_view name) {
  const auto names = param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params_[i];
  }
  throw InvalidInput("SequenceModel: no parameter named " + std::string(name));
}

template <typename T>
const Matrix<T>& SequenceModel<T>::param(std::string_view name) const {
  return const_cast<SequenceModel*>(this)->param(name);
}

template <typename T>
std::size_t SequenceModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

template <typename T>
ParameterSet<T> SequenceModel<T>::zero_gradients() const {
  ParameterSet<T> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(Matrix<T>::Zero(p.rows(), p.cols()));
  return out;
}

template <typename T>
bool SequenceModel<T>::operator==(const SequenceModel& other) const {
  if (kind_ != other.kind_ || input_dim_ != other.input_dim_ || hidden_dim_ != other.hidden_dim_) {
    return false;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i] != other.params_[i]) return false;
  }
  return true;
}

template <typename T>
ForwardResult<T> forward(const SequenceModel<T>& model, const Matrix<T>& frames) {
  FullTrace<T> trace = run(model, frames);
  ForwardResult<T> out;
  if (model.kind() == CellKind::Gru) {
    out.hidden = std::move(trace.gru.hidden);
  } else {
    out.hidden = std::move(trace.lstm_fwd.hidden);
  }
  if (model.kind() == CellKind::BiLstm) {
    // Stored in processing order (frame T-1 first); realign to frame order.
    out.backward_hidden = trace.lstm_bwd.hidden.colwise().reverse();
  }
  out.representation = std::move(trace.representation);
  out.logits = std::move(trace.logits);
  out.probabilities = trace.probabilities;
  return out;
}

double loss(const ClassProbabilities& probabilities, Label label) {
  return -std::log(std::max(probabilities.of(label), 1e-12));
}

template <typename T>
BackwardResult<T> backward(const SequenceModel<T>& model, const Matrix<T>& frames, Label label) {
  const FullTrace<T> trace = run(model, frames);
  const auto& p = model.params();
  const Eigen::Index h = model.hidden_dim();

  BackwardResult<T> out;
  out.probabilities = trace.probabilities;
  out.loss = loss(trace.probabilities, label);
  out.gradients = model.zero_gradients();
  auto& g = out.gradients;

  Vector<T> d_logits(2);
  d_logits(0) = static_cast<T>(trace.probabilities.p_live - (label == Label::Live ? 1.0 : 0.0));
  d_logits(1) = static_cast<T>(trace.probabilities.p_attack - (label == Label::Attack ? 1.0 : 0.0));
  const std::size_t head = p.size() - 2;
  g[head].noalias() = d_logits * trace.representation.transpose();
  g[head + 1].col(0) = d_logits;
  const Vector<T> d_rep = p[head].transpose() * d_logits;

  switch (model.kind()) {
    case CellKind::Lstm:
      lstm_backward(p[1], frames, false, trace.lstm_fwd, d_rep, g[0], g[1], g[2]);
      break;
    case CellKind::BiLstm:
      lstm_backward(p[1], frames, false, trace.lstm_fwd, Vector<T>(d_rep.segment(0, h)), g[0],
                    g[1], g[2]);
      lstm_backward(p[4], frames, true, trace.lstm_bwd, Vector<T>(d_rep.segment(h, h)), g[3],
                    g[4], g[5]);
      break;
    case CellKind::Gru:
      gru_backward(p[1], frames, trace.gru, d_rep, g[0], g[1], g[2]);
      break;
  }
  return out;
}

template <typename T>
LstmState<T> lstm_step(const Matrix<T>& input_weights, const Matrix<T>& recurrent_weights,
                       const Matrix<T>& bias, const Vector<T>& input, const LstmState<T>& prev) {
  const Eigen::Index h = recurrent_weights.cols();
  const Vector<T> pre = input_weights * input + recurrent_weights * prev.hidden + bias.col(0);
  const Vector<T> i = sigmoid<T>(pre.segment(0, h));
  const Vector<T> f = sigmoid<T>(pre.segment(h, h));
  const Vector<T> o = sigmoid<T>(pre.segment(2 * h, h));
  const Vector<T> g = tanh<T>(pre.segment(3 * h, h));
  LstmState<T> next;
  next.cell = f.cwiseProduct(prev.cell) + i.cwiseProduct(g);
  next.hidden = o.cwiseProduct(tanh<T>(next.cell));
  return next;
}

template <typename T>
Vector<T> gru_step(const Matrix<T>& input_weights, const Matrix<T>& recurrent_weights,
                   const Matrix<T>& bias, const Vector<T>& input, const Vector<T>& prev_hidden) {
  const Eigen::Index h = recurrent_weights.cols();
  const Vector<T> wx = input_weights * input + bias.col(0);
  const Vector<T> z = sigmoid<T>(wx.segment(0, h) + recurrent_weights.topRows(h) * prev_hidden);
  const Vector<T> r =
      sigmoid<T>(wx.segment(h, h) + recurrent_weights.middleRows(h, h) * prev_hidden);
  const Vector<T> n = tanh<T>(wx.segment(2 * h, h) +
                              recurrent_weights.bottomRows(h) * r.cwiseProduct(prev_hidden));
  return z.cwiseProduct(prev_hidden) + (Vector<T>::Ones(h) - z).cwiseProduct(n);
}

template class SequenceModel<float>;
template class SequenceModel<double>;
template ForwardResult<float> forward(const SequenceModel<float>&, const Matrix<float>&);
template ForwardResult<double> forward(const SequenceModel<double>&, const Matrix<double>&);
template BackwardResult<float> backward(const SequenceModel<float>&, const Matrix<float>&, Label);
template BackwardResult<double> backward(const SequenceModel<double>&, const Matrix<double>&,
                                         Label);
template LstmState<float> lstm_step(const Matrix<float>&, const Matrix<float>&,
                                    const Matrix<float>&, const Vector<float>&,
                                    const LstmState<float>&);
template LstmState<double> lstm_step(const Matrix<double>&, const Matrix<double>&,
                                     const Matrix<double>&, const Vector<double>&,
                                     const LstmState<double>&);
template Vector<float> gru_step(const Matrix<float>&, const Matrix<float>&, const Matrix<float>&,
                                const Vector<float>&, const Vector<float>&);
template Vector<double> gru_step(const Matrix<double>&, const Matrix<double>&,
                                 const Matrix<double>&, const Vector<double>&,
                                 const Vector<double>&);

}  // namespace fas
