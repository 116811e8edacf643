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
#include <vector>

namespace fas {

struct SamplerConfig {
  /// Frames per non-overlapping segment.
  std::uint32_t segment_length = 30;
};

/// Result of uniform frame skipping over one video.
struct FrameSelection {
  std::uint32_t total_frames = 0;
  /// Number of complete segments (0 when the video is shorter than one segment).
  std::uint32_t segments = 0;
  /// Zero-based, strictly increasing.
  std::vector<std::uint32_t> indices;
};

/// Keeps the last frame of every complete segment: {S-1, 2S-1, ..., kS-1}, k = T / S.
/// A video shorter than one segment yields its final frame only; the trailing
/// partial segment of a longer video is dropped.
///
/// Throws InvalidInput when total_frames or segment_length is zero.
FrameSelection select_frames(std::uint32_t total_frames, const SamplerConfig& config = {});

}  // namespace fas
