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

#include "fas/frame_sampler.hpp"

#include "fas/error.hpp"

namespace fas {

FrameSelection select_frames(std::uint32_t total_frames, const SamplerConfig& config) {
  if (total_frames == 0) {
    throw InvalidInput("select_frames: video has no frames to sample");
  }
  const std::uint32_t segment = config.segment_length;
  if (segment == 0) {
    throw InvalidInput("select_frames: segment_length must be >= 1");
  }

  FrameSelection selection;
  selection.total_frames = total_frames;
  selection.segments = total_frames / segment;
  if (selection.segments == 0) {
    selection.indices.push_back(total_frames - 1);
    return selection;
  }
  selection.indices.reserve(selection.segments);
  for (std::uint32_t k = 1; k <= selection.segments; ++k) {
    selection.indices.push_back(k * segment - 1);
  }
  return selection;
}

}  // namespace fas
