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

#include "fas/model_io.hpp"

#include "binary_io.hpp"
#include "fas/error.hpp"

namespace fas {
namespace {
constexpr std::string_view kModelMagic = "FSQM";
}  // namespace

std::string encode_model(const SequenceModel<float>& model) {
  detail::ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u32(static_cast<std::uint32_t>(model.input_dim()));
  w.u32(static_cast<std::uint32_t>(model.hidden_dim()));
  const auto names = model.param_names();
  w.u32(static_cast<std::uint32_t>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& p = model.params()[i];
    w.str(names[i]);
    w.u32(static_cast<std::uint32_t>(p.rows()));
    w.u32(static_cast<std::uint32_t>(p.cols()));
    w.f32_array(std::span<const float>(p.data(), static_cast<std::size_t>(p.size())));
  }
  return w.take();
}

SequenceModel<float> decode_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kModelMagic.size()) != kModelMagic) {
    throw FormatError("bad model magic", 0);
  }
  const std::size_t version_offset = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version),
                      version_offset);
  }
  const std::size_t kind_offset = r.offset();
  const std::uint8_t raw_kind = r.u8();
  if (raw_kind > static_cast<std::uint8_t>(CellKind::Gru)) {
    throw FormatError("unknown cell kind " + std::to_string(raw_kind), kind_offset);
  }
  const std::size_t dims_offset = r.offset();
  const std::uint32_t input_dim = r.u32();
  const std::uint32_t hidden_dim = r.u32();
  if (input_dim == 0 || hidden_dim == 0) {
    throw FormatError("model dims must be >= 1", dims_offset);
  }
  SequenceModel<float> model(static_cast<CellKind>(raw_kind), input_dim, hidden_dim);
  const auto names = model.param_names();

  const std::size_t count_offset = r.offset();
  const std::uint32_t count = r.u32();
  if (count != names.size()) {
    throw FormatError("expected " + std::to_string(names.size()) + " parameters, found " +
                          std::to_string(count),
                      count_offset);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::size_t entry_offset = r.offset();
    const std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    auto& p = model.params()[i];
    if (name != names[i] || rows != p.rows() || cols != p.cols()) {
      throw FormatError("parameter " + std::to_string(i) + " is " + name + " " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                            names[i] + " " + std::to_string(p.rows()) + "x" +
                            std::to_string(p.cols()),
                        entry_offset);
    }
    r.f32_array(std::span<float>(p.data(), static_cast<std::size_t>(p.size())));
    if (!p.allFinite()) {
      throw IntegrityError("model parameter " + name + " has non-finite values");
    }
  }
  if (!r.at_end()) {
    throw FormatError("trailing bytes after model payload", r.offset());
  }
  return model;
}

}  // namespace fas
