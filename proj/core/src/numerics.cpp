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

#include "fas/numerics.hpp"

#include <cmath>
#include <string>

#include "fas/error.hpp"

namespace fas {

template <typename T>
Matrix<T> he_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, RngStream& rng) {
  if (rows < 1 || cols < 1) {
    throw InvalidInput("he_init: shape must be at least 1x1");
  }
  if (fan_in < 1) {
    throw InvalidInput("he_init: fan_in must be >= 1");
  }
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Matrix<T> out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
  }
  return out;
}

template <typename T>
void adam_step(Matrix<T>& params, const Matrix<T>& grads, AdamState<T>& state,
               double learning_rate, std::string_view name) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols()) {
    throw InvalidInput("adam_step: gradient shape mismatch for " + std::string(name));
  }
  if (state.first_moment.rows() != params.rows() || state.first_moment.cols() != params.cols() ||
      state.second_moment.rows() != params.rows() || state.second_moment.cols() != params.cols()) {
    throw InvalidInput("adam_step: optimizer state shape mismatch for " + std::string(name));
  }
  if (!grads.allFinite()) {
    throw NumericalError("adam_step: non-finite gradient in " + std::string(name));
  }

  const auto& h = state.hyper;
  const std::int64_t t = state.step_count + 1;
  const T b1 = static_cast<T>(h.beta1);
  const T b2 = static_cast<T>(h.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(h.beta1, static_cast<double>(t)));
  const T correction2 = static_cast<T>(1.0 - std::pow(h.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(learning_rate);
  const T eps = static_cast<T>(h.epsilon);

  T* p = params.data();
  const T* g = grads.data();
  T* m = state.first_moment.data();
  T* v = state.second_moment.data();
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T m_hat = m[i] / correction1;
    const T v_hat = v[i] / correction2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  state.step_count = t;
}

Matrix<double> finite_difference_gradient(const std::function<double(const Matrix<double>&)>& loss,
                                          const Matrix<double>& params, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw InvalidInput("finite_difference_gradient: epsilon must be > 0");
  }
  Matrix<double> grad(params.rows(), params.cols());
  Matrix<double> probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double original = probe.data()[i];
    probe.data()[i] = original + epsilon;
    const double plus = loss(probe);
    probe.data()[i] = original - epsilon;
    const double minus = loss(probe);
    probe.data()[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericalError("finite_difference_gradient: non-finite loss at coordinate " +
                           std::to_string(i));
    }
    grad.data()[i] = (plus - minus) / (2.0 * epsilon);
  }
  return grad;
}

template Matrix<float> he_init<float>(Eigen::Index, Eigen::Index, Eigen::Index, RngStream&);
template Matrix<double> he_init<double>(Eigen::Index, Eigen::Index, Eigen::Index, RngStream&);
template void adam_step<float>(Matrix<float>&, const Matrix<float>&, AdamState<float>&, double,
                               std::string_view);
template void adam_step<double>(Matrix<double>&, const Matrix<double>&, AdamState<double>&,
                                double, std::string_view);

}  // namespace fas
