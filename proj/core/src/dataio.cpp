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

#include "fas/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "fas/error.hpp"
#include "fas/rng.hpp"

namespace fas {
namespace {

constexpr std::string_view kFseqMagic = "FSEQ";

template <typename M>
bool same_values(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base_dir,
                              const std::filesystem::path& p) {
  return p.is_absolute() ? p : base_dir / p;
}

}  // namespace

bool FeatureSequence::operator==(const FeatureSequence& other) const {
  return video_id == other.video_id && label == other.label &&
         frame_indices == other.frame_indices && same_values(values, other.values);
}

void validate(const FeatureSequence& seq) {
  if (seq.dim() < 1) {
    throw InvalidInput("feature sequence '" + seq.video_id + "': dim must be >= 1");
  }
  if (seq.frames() < 1) {
    throw InvalidInput("feature sequence '" + seq.video_id + "': needs at least one frame");
  }
  if (static_cast<Eigen::Index>(seq.frame_indices.size()) != seq.frames()) {
    throw InvalidInput("feature sequence '" + seq.video_id + "': " +
                       std::to_string(seq.frame_indices.size()) + " frame indices for " +
                       std::to_string(seq.frames()) + " frames");
  }
  for (std::size_t i = 1; i < seq.frame_indices.size(); ++i) {
    if (seq.frame_indices[i] <= seq.frame_indices[i - 1]) {
      throw InvalidInput("feature sequence '" + seq.video_id +
                         "': frame indices must be strictly increasing");
    }
  }
  if (!seq.values.allFinite()) {
    throw IntegrityError("feature sequence '" + seq.video_id + "': non-finite feature values");
  }
}

std::string encode_fseq(const FeatureSequence& seq) {
  validate(seq);
  detail::ByteWriter w;
  w.bytes(kFseqMagic);
  w.u32(kFseqVersion);
  w.u32(static_cast<std::uint32_t>(seq.dim()));
  w.u32(static_cast<std::uint32_t>(seq.frames()));
  w.u8(static_cast<std::uint8_t>(seq.label));
  w.str(seq.video_id);
  for (const std::uint32_t idx : seq.frame_indices) w.u32(idx);
  w.f32_array(std::span<const float>(seq.values.data(), static_cast<std::size_t>(seq.values.size())));
  return w.take();
}

FeatureSequence decode_fseq(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kFseqMagic.size()) != kFseqMagic) {
    throw FormatError("bad FSEQ magic", 0);
  }
  const std::size_t version_offset = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kFseqVersion) {
    throw FormatError("unsupported FSEQ version " + std::to_string(version), version_offset);
  }
  const std::size_t dim_offset = r.offset();
  const std::uint32_t dim = r.u32();
  if (dim == 0) {
    throw FormatError("FSEQ dim must be >= 1", dim_offset);
  }
  const std::size_t frames_offset = r.offset();
  const std::uint32_t frames = r.u32();
  if (frames == 0) {
    throw FormatError("FSEQ frames must be >= 1", frames_offset);
  }
  const std::size_t label_offset = r.offset();
  const std::uint8_t label = r.u8();
  if (label > 1) {
    throw FormatError("FSEQ label must be 0 or 1, got " + std::to_string(label), label_offset);
  }

  FeatureSequence seq;
  seq.label = static_cast<Label>(label);
  seq.video_id = r.str();

  // Check the full payload length up front so truncation reports expected vs. actual.
  const std::uint64_t expected = 4ull * frames + 4ull * frames * dim;
  if (r.remaining() < expected) {
    throw FormatError("truncated FSEQ payload: expected " + std::to_string(expected) +
                          " bytes, " + std::to_string(r.remaining()) + " available",
                      r.offset());
  }
  seq.frame_indices.resize(frames);
  for (auto& idx : seq.frame_indices) idx = r.u32();
  seq.values.resize(frames, dim);
  r.f32_array(std::span<float>(seq.values.data(), static_cast<std::size_t>(seq.values.size())));
  if (!r.at_end()) {
    throw FormatError("trailing bytes after FSEQ payload", r.offset());
  }
  for (std::size_t i = 1; i < seq.frame_indices.size(); ++i) {
    if (seq.frame_indices[i] <= seq.frame_indices[i - 1]) {
      throw IntegrityError("FSEQ '" + seq.video_id + "': frame indices not strictly increasing");
    }
  }
  if (!seq.values.allFinite()) {
    throw IntegrityError("FSEQ '" + seq.video_id + "': NaN or Inf in feature payload");
  }
  return seq;
}

void write_fseq(const FeatureSequence& seq, const std::filesystem::path& path) {
  detail::write_file(path, encode_fseq(seq));
}

FeatureSequence read_fseq(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_fseq(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  } catch (const IntegrityError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  const auto base = path.parent_path();
  std::vector<ManifestRow> rows;
  std::string line;
  std::uint64_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!saw_header) {
      if (text != kManifestHeader) {
        throw FormatError(path.string() + ": manifest header must be '" +
                              std::string(kManifestHeader) + "'",
                          line_no);
      }
      saw_header = true;
      continue;
    }
    const auto fields = split(text, ',');
    if (fields.size() != 4) {
      throw FormatError(path.string() + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected 4",
                        line_no);
    }
    const auto label = parse_label(fields[1]);
    if (!label) {
      throw FormatError(path.string() + ": row " + std::to_string(line_no) +
                            " has unknown label '" + fields[1] + "'",
                        line_no);
    }
    if (fields[0].empty()) {
      throw FormatError(path.string() + ": row " + std::to_string(line_no) + " has empty path",
                        line_no);
    }
    rows.push_back({resolve(base, fields[0]), *label, fields[2], fields[3]});
  }
  if (!saw_header) {
    throw FormatError(path.string() + ": empty manifest (header missing)", 0);
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& row : rows) {
    out << row.fseq_path.generic_string() << ',' << to_string(row.label) << ','
        << row.dataset_tag << ',' << row.subject_id << '\n';
  }
  detail::write_file(path, out.str());
}

void validate(const ProtocolConfig& config) {
  if (config.source_datasets.empty()) {
    throw InvalidInput("protocol '" + config.name + "': no source datasets");
  }
  if (config.target_dataset.empty()) {
    throw InvalidInput("protocol '" + config.name + "': no target dataset");
  }
  for (const auto& source : config.source_datasets) {
    if (source == config.target_dataset) {
      throw InvalidInput("protocol '" + config.name + "': target dataset '" +
                         config.target_dataset + "' also listed as a source");
    }
    if (std::count(config.source_datasets.begin(), config.source_datasets.end(), source) > 1) {
      throw InvalidInput("protocol '" + config.name + "': source '" + source + "' listed twice");
    }
    if (!config.train_manifests.contains(source)) {
      throw InvalidInput("protocol '" + config.name + "': missing train." + source);
    }
    if (!config.test_manifests.contains(source)) {
      throw InvalidInput("protocol '" + config.name + "': missing test." + source);
    }
  }
  if (!config.test_manifests.contains(config.target_dataset)) {
    throw InvalidInput("protocol '" + config.name + "': missing test." + config.target_dataset);
  }
}

ProtocolConfig read_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open protocol config " + path.string());
  }
  const auto base = path.parent_path();
  ProtocolConfig config;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(path.string() + ": expected 'key = value' on line " +
                            std::to_string(line_no),
                        line_no);
    }
    const std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (key == "format_version") {
      if (value != "1") {
        throw FormatError(path.string() + ": unsupported protocol format_version " + value,
                          line_no);
      }
    } else if (key == "name") {
      config.name = value;
    } else if (key == "sources") {
      config.source_datasets.clear();
      for (auto& tag : split(value, ',')) {
        if (!tag.empty()) config.source_datasets.push_back(tag);
      }
    } else if (key == "target") {
      config.target_dataset = value;
    } else if (key.starts_with("train.")) {
      config.train_manifests[key.substr(6)] = resolve(base, value);
    } else if (key.starts_with("test.")) {
      config.test_manifests[key.substr(5)] = resolve(base, value);
    } else {
      throw FormatError(path.string() + ": unknown key '" + key + "'", line_no);
    }
  }
  validate(config);
  return config;
}

void write_protocol(const std::filesystem::path& path, const ProtocolConfig& config) {
  validate(config);
  std::ostringstream out;
  out << "format_version = 1\n";
  out << "name = " << config.name << '\n';
  out << "sources = ";
  for (std::size_t i = 0; i < config.source_datasets.size(); ++i) {
    out << (i ? "," : "") << config.source_datasets[i];
  }
  out << "\ntarget = " << config.target_dataset << '\n';
  for (const auto& [tag, p] : config.train_manifests) {
    out << "train." << tag << " = " << p.generic_string() << '\n';
  }
  for (const auto& [tag, p] : config.test_manifests) {
    out << "test." << tag << " = " << p.generic_string() << '\n';
  }
  detail::write_file(path, out.str());
}

std::vector<FeatureSequence> load_sequences(std::span<const ManifestRow> rows) {
  std::vector<FeatureSequence> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    FeatureSequence seq = read_fseq(row.fseq_path);
    if (seq.label != row.label) {
      throw IntegrityError(row.fseq_path.string() + ": file label '" +
                           std::string(to_string(seq.label)) + "' disagrees with manifest label '" +
                           std::string(to_string(row.label)) + "'");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

ProtocolData load_protocol(const ProtocolConfig& config) {
  validate(config);

  struct Part {
    std::filesystem::path manifest;
    std::string dataset;
    std::vector<FeatureSequence>* sink;
  };
  ProtocolData data;
  std::vector<Part> parts;
  for (const auto& source : config.source_datasets) {
    parts.push_back({config.train_manifests.at(source), source, &data.train});
  }
  for (const auto& source : config.source_datasets) {
    parts.push_back({config.test_manifests.at(source), source, &data.source_test});
  }
  parts.push_back({config.test_manifests.at(config.target_dataset), config.target_dataset,
                   &data.target_test});

  // First pass: collect every missing file so the user sees them all at once.
  std::vector<std::string> missing;
  std::vector<std::vector<ManifestRow>> manifests;
  for (const auto& part : parts) {
    if (!std::filesystem::exists(part.manifest)) {
      missing.push_back(part.manifest.string());
      manifests.emplace_back();
      continue;
    }
    auto rows = read_manifest(part.manifest);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].dataset_tag != part.dataset) {
        throw InvalidInput(part.manifest.string() + ": entry " + std::to_string(i + 1) +
                           " belongs to dataset '" + rows[i].dataset_tag + "', expected '" +
                           part.dataset + "'");
      }
      if (!std::filesystem::exists(rows[i].fseq_path)) {
        missing.push_back(rows[i].fseq_path.string());
      }
    }
    manifests.push_back(std::move(rows));
  }
  if (!missing.empty()) {
    std::string message = "protocol '" + config.name + "': " + std::to_string(missing.size()) +
                          " missing file(s):";
    for (const auto& m : missing) message += "\n  " + m;
    throw IoError(message);
  }

  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto loaded = load_sequences(manifests[i]);
    for (auto& seq : loaded) parts[i].sink->push_back(std::move(seq));
  }
  return data;
}

Split stratified_split(std::span<const FeatureSequence> items, double fraction,
                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidInput("stratified_split: fraction must be strictly between 0 and 1");
  }
  Split split;
  for (const Label label : {Label::Live, Label::Attack}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].label == label) members.push_back(i);
    }
    const std::size_t n = members.size();
    std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n >= 2) take = std::clamp<std::size_t>(take, 1, n - 1);
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    const auto order = permutation(n, rng);
    for (std::size_t k = 0; k < n; ++k) {
      (k < take ? split.held_out : split.kept).push_back(members[order[k]]);
    }
  }
  std::sort(split.kept.begin(), split.kept.end());
  std::sort(split.held_out.begin(), split.held_out.end());
  if (split.kept.empty() || split.held_out.empty()) {
    throw InvalidInput("stratified_split: " + std::to_string(items.size()) +
                       " items are too few to split");
  }
  return split;
}

bool FeatureNormalizer::operator==(const FeatureNormalizer& other) const {
  return same_values(mean, other.mean) && same_values(inv_std, other.inv_std);
}

FeatureNormalizer FeatureNormalizer::fit(std::span<const FeatureSequence> items) {
  if (items.empty()) {
    throw InvalidInput("FeatureNormalizer::fit: no sequences");
  }
  const Eigen::Index dim = items.front().dim();
  Vector<double> sum = Vector<double>::Zero(dim);
  Vector<double> sum_sq = Vector<double>::Zero(dim);
  double count = 0.0;
  for (const auto& seq : items) {
    if (seq.dim() != dim) {
      throw InvalidInput("FeatureNormalizer::fit: inconsistent feature dims");
    }
    for (Eigen::Index t = 0; t < seq.frames(); ++t) {
      const Vector<double> row = seq.values.row(t).transpose().cast<double>();
      sum += row;
      sum_sq += row.cwiseProduct(row);
      count += 1.0;
    }
  }
  FeatureNormalizer norm;
  const Vector<double> mean = sum / count;
  const Vector<double> var = (sum_sq / count - mean.cwiseProduct(mean)).cwiseMax(0.0);
  norm.mean = mean.cast<float>();
  norm.inv_std = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; })
                     .cast<float>();
  return norm;
}

Matrix<float> FeatureNormalizer::apply(const Matrix<float>& values) const {
  if (empty()) return values;
  if (values.cols() != mean.size()) {
    throw InvalidInput("FeatureNormalizer: expected dim " + std::to_string(mean.size()) +
                       ", got " + std::to_string(values.cols()));
  }
  Matrix<float> out = values;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() *= inv_std.transpose().array();
  return out;
}

}  // namespace fas
