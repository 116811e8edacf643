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
#include <filesystem>
#include <string>
#include <vector>

#include "fas/dataio.hpp"

namespace fas {

/// Synthetic live/attack feature sequences with a known separating signal.
///
/// A base vector mu ~ N(0, I) is drawn once per spec. Frame t (0-based) of a
/// video is
///   live:   mu + separation * sin(2 pi t / frames + phi) + noise * e_t
///   attack: mu + noise * e_t
/// with phi ~ U[0, 2 pi) drawn per video and coordinate, e_t ~ N(0, I). Live
/// faces move, attacks are static; with separation = 0 the classes coincide.
/// Labels alternate live, attack, live, ... in generation order.
struct SyntheticSpec {
  std::size_t videos_per_class = 100;
  Eigen::Index dim = 16;
  std::uint32_t frames = 7;
  double separation = 5.0;
  double noise = 1.0;
  std::uint64_t seed = 42;
  /// Segment length used to derive the recorded frame indices.
  std::uint32_t segment_length = 30;
};

/// Throws InvalidInput for negative separation, non-positive noise or empty shapes.
void validate(const SyntheticSpec& spec);

std::vector<FeatureSequence> generate_synthetic(const SyntheticSpec& spec);

/// A complete synthetic leave-one-out protocol on disk.
struct SyntheticProtocolSpec {
  SyntheticSpec data;  // videos_per_class is derived from the counts below
  std::vector<std::string> sources = {"O", "C", "I"};
  std::string target = "M";
  std::size_t train_videos = 400;
  std::size_t source_test_videos = 100;
  std::size_t target_test_videos = 100;
};

/// Writes FSEQ files under `dir/data/<tag>/`, manifests under `dir/manifests/`
/// and the protocol config at `dir/protocol.txt`. Train and source-test videos
/// are dealt round-robin over the sources. Returns the config as read back.
ProtocolConfig write_synthetic_protocol(const std::filesystem::path& dir,
                                        const SyntheticProtocolSpec& spec);

}  // namespace fas
