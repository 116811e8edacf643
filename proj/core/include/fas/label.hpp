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
#include <string_view>

namespace fas {

/// Ground truth for one video. Attack is the positive class project-wide:
/// higher scores mean "more attack-like".
enum class Label : std::uint8_t { Live = 0, Attack = 1 };

inline constexpr std::string_view to_string(Label label) {
  return label == Label::Live ? "live" : "attack";
}

inline constexpr std::optional<Label> parse_label(std::string_view text) {
  if (text == "live") return Label::Live;
  if (text == "attack") return Label::Attack;
  return std::nullopt;
}

inline constexpr int class_index(Label label) { return static_cast<int>(label); }

}  // namespace fas
