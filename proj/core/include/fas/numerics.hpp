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
#include <functional>
#include <string_view>

#include <Eigen/Core>

#include "fas/rng.hpp"

namespace fas {

/// Dense row-major matrix. Biases are stored as n x 1 matrices so every model
/// parameter shares one type.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return m.allFinite();
}

/// He-normal initialization: entries ~ N(0, 2 / fan_in).
template <typename T>
Matrix<T> he_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, RngStream& rng);

struct AdamHyperParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamHyperParams&) const = default;
};

/// Per-parameter Adam moments.
template <typename T>
struct AdamState {
  Matrix<T> first_moment;
  Matrix<T> second_moment;
  std::int64_t step_count = 0;
  AdamHyperParams hyper;

  static AdamState zeros_like(const Matrix<T>& params, AdamHyperParams hyper = {}) {
    AdamState state;
    state.first_moment = Matrix<T>::Zero(params.rows(), params.cols());
    state.second_moment = Matrix<T>::Zero(params.rows(), params.cols());
    state.hyper = hyper;
    return state;
  }
};

/// One bias-corrected Adam update, in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  t <- t + 1
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
///
/// Throws InvalidInput on shape mismatch and NumericalError (naming `name`)
/// when `grads` holds a non-finite entry. Nothing is modified on error.
template <typename T>
void adam_step(Matrix<T>& params, const Matrix<T>& grads, AdamState<T>& state,
               double learning_rate, std::string_view name = "param");

/// Central-difference gradient of `loss` at `params`, one coordinate at a time.
Matrix<double> finite_difference_gradient(const std::function<double(const Matrix<double>&)>& loss,
                                          const Matrix<double>& params, double epsilon = 1e-5);

}  // namespace fas
