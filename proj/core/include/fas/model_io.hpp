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
#include <string>
#include <string_view>

#include "fas/sequence_model.hpp"

namespace fas {

// Sequence model container, little-endian:
//
//   "FSQM"              magic
//   version             u32 (= kModelFormatVersion)
//   kind                u8  (0 LSTM, 1 BILSTM, 2 GRU)
//   input_dim           u32
//   hidden_dim          u32
//   parameter count     u32
//   per parameter:      name (u32 length + bytes), rows u32, cols u32,
//                       rows x cols float32 row-major
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string encode_model(const SequenceModel<float>& model);
/// Throws FormatError on malformed input (including parameter names or shapes
/// that do not match the declared kind and dims) and IntegrityError on non-finite weights.
SequenceModel<float> decode_model(std::string_view bytes);

}  // namespace fas
