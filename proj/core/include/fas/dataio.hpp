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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fas/label.hpp"
#include "fas/numerics.hpp"

namespace fas {

/// One video reduced to its sampled frames' CNN features.
struct FeatureSequence {
  std::string video_id;
  Label label = Label::Live;
  /// Original (zero-based) indices of the sampled frames, one per row of `values`.
  std::vector<std::uint32_t> frame_indices;
  /// frames x dim.
  Matrix<float> values;

  Eigen::Index frames() const noexcept { return values.rows(); }
  Eigen::Index dim() const noexcept { return values.cols(); }

  bool operator==(const FeatureSequence& other) const;
};

/// Throws InvalidInput for shape violations and IntegrityError for non-finite values.
void validate(const FeatureSequence& seq);

// FSEQ container, all integers little-endian:
//
//   "FSEQ"                 4 bytes magic
//   version                u32 (= kFseqVersion)
//   dim                    u32, >= 1
//   frames                 u32, >= 1
//   label                  u8, 0 = live, 1 = attack
//   video_id               u32 byte length + UTF-8 bytes
//   frame_indices          frames x u32, strictly increasing
//   values                 frames x dim float32, row-major
inline constexpr std::uint32_t kFseqVersion = 1;

std::string encode_fseq(const FeatureSequence& seq);
/// Throws FormatError (with byte offset) on bad magic, version, header fields or
/// truncation, and IntegrityError on NaN/Inf payload values.
FeatureSequence decode_fseq(std::string_view bytes);

void write_fseq(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_fseq(const std::filesystem::path& path);

/// One row of a dataset manifest. The CSV header is exactly
/// `fseq_path,label,dataset_tag,subject_id`; relative paths are resolved
/// against the manifest's directory on read. Fields may not contain commas.
struct ManifestRow {
  std::filesystem::path fseq_path;
  Label label = Label::Live;
  std::string dataset_tag;
  std::string subject_id;
};

inline constexpr std::string_view kManifestHeader = "fseq_path,label,dataset_tag,subject_id";

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

/// Leave-one-out protocol: train on the sources, test on the unseen target.
///
/// Text file, one `key = value` per line, `#` comments:
///   format_version = 1
///   name = OCI_to_M
///   sources = O,C,I
///   target = M
///   train.O = manifests/O_train.csv      (one per source)
///   test.O = manifests/O_test.csv        (one per source, plus the target)
/// Relative manifest paths are resolved against the config file's directory.
struct ProtocolConfig {
  std::string name;
  std::vector<std::string> source_datasets;
  std::string target_dataset;
  std::map<std::string, std::filesystem::path> train_manifests;
  std::map<std::string, std::filesystem::path> test_manifests;
};

/// Throws InvalidInput when the target is among the sources, sources are empty,
/// or a required manifest entry is missing.
void validate(const ProtocolConfig& config);

ProtocolConfig read_protocol(const std::filesystem::path& path);
void write_protocol(const std::filesystem::path& path, const ProtocolConfig& config);

struct ProtocolData {
  /// Source datasets' train splits, pooled.
  std::vector<FeatureSequence> train;
  /// Source datasets' test splits, pooled; used for the EER threshold.
  std::vector<FeatureSequence> source_test;
  /// Target dataset's test split.
  std::vector<FeatureSequence> target_test;
};

/// Reads every manifest and FSEQ file of the protocol. Missing files are
/// collected and reported together in one IoError.
ProtocolData load_protocol(const ProtocolConfig& config);

/// Loads all sequences listed in one manifest, checking manifest vs. file labels.
std::vector<FeatureSequence> load_sequences(std::span<const ManifestRow> rows);

struct Split {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> held_out;
};

/// Seeded split stratified by label: round(fraction * n_c) items of each class c
/// are held out (at least one when the class has two or more). Index lists are
/// ascending. Throws InvalidInput if either side would be empty.
Split stratified_split(std::span<const FeatureSequence> items, double fraction, std::uint64_t seed);

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (const std::size_t i : indices) out.push_back(items[i]);
  return out;
}

/// Optional per-dimension z-scoring fitted on training features.
struct FeatureNormalizer {
  Vector<float> mean;
  Vector<float> inv_std;

  bool empty() const noexcept { return mean.size() == 0; }
  static FeatureNormalizer fit(std::span<const FeatureSequence> items);
  Matrix<float> apply(const Matrix<float>& values) const;

  bool operator==(const FeatureNormalizer& other) const;
};

}  // namespace fas
