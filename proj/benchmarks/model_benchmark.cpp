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

#include <benchmark/benchmark.h>

#include "fas/frame_sampler.hpp"
#include "fas/rng.hpp"
#include "fas/sequence_model.hpp"

namespace fas {
namespace {

Matrix<float> random_frames(RngStream& rng, Eigen::Index frames, Eigen::Index dim) {
  Matrix<float> m(frames, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

// Args: cell kind, input dim, hidden dim. Seven frames throughout.
void BM_Forward(benchmark::State& state) {
  RngStream rng(1);
  const auto kind = static_cast<CellKind>(state.range(0));
  const auto model = SequenceModel<float>::initialized(kind, state.range(1), state.range(2), rng);
  const auto frames = random_frames(rng, 7, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, frames));
  state.SetLabel(std::string(to_string(kind)));
}

void BM_Backward(benchmark::State& state) {
  RngStream rng(1);
  const auto kind = static_cast<CellKind>(state.range(0));
  const auto model = SequenceModel<float>::initialized(kind, state.range(1), state.range(2), rng);
  const auto frames = random_frames(rng, 7, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(backward(model, frames, Label::Attack));
  state.SetLabel(std::string(to_string(kind)));
}

// Desk-scale sizes and the full-size configuration on 1920-dim features.
#define FAS_MODEL_ARGS                                                                  \
  Args({0, 16, 32})->Args({1, 16, 16})->Args({2, 16, 8})->Args({0, 1920, 1000})        \
      ->Args({1, 1920, 500})->Args({2, 1920, 20})->Unit(benchmark::kMicrosecond)

BENCHMARK(BM_Forward)->FAS_MODEL_ARGS;
BENCHMARK(BM_Backward)->FAS_MODEL_ARGS;

void BM_SelectFrames(benchmark::State& state) {
  const auto total = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(select_frames(total, {30}));
}
BENCHMARK(BM_SelectFrames)->Arg(210)->Arg(100000);

}  // namespace
}  // namespace fas
