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
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fas {

/// Deterministic random stream used for every stochastic step (init, shuffles,
/// splits, synthetic data).
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Distributions are implemented here rather than taken from
/// <random> because the standard library's distributions are
/// implementation-defined. Integer draws (below, permutation) are bit-exact
/// everywhere; normal draws additionally depend on the platform's log/sin/cos.
///
///   uniform01: (bits >> 11) * 2^-53, in [0, 1)
///   normal:    Box-Muller on two uniform01 draws, both outputs used in turn
///   below(n):  rejection sampling on the top of the 64-bit range
///
/// A stream is single-consumer; do not share one across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for a named sub-task (e.g. "lstm", "split") of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Fisher-Yates permutation of [0, n), a pure function of the stream state.
std::vector<std::size_t> permutation(std::size_t n, RngStream& rng);

}  // namespace fas
