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

#include "fas/evaluation.hpp"
#include "fas/rng.hpp"

namespace fas {
namespace {

ScoreSet random_scores(std::size_t n) {
  RngStream rng(3);
  ScoreSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i % 2 == 0 ? Label::Live : Label::Attack;
    s.entries.push_back({"v", rng.normal(label == Label::Attack ? 1.0 : 0.0), label});
  }
  return s;
}

void BM_RocAuc(benchmark::State& state) {
  const auto scores = random_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auc(roc_curve(scores)));
}
BENCHMARK(BM_RocAuc)->Range(64, 1 << 16);

void BM_Eer(benchmark::State& state) {
  const auto scores = random_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eer(scores));
}
BENCHMARK(BM_Eer)->Range(64, 1 << 16);

}  // namespace
}  // namespace fas
