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

#include "fas/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "fas/error.hpp"
#include "fas/frame_sampler.hpp"
#include "fas/rng.hpp"

namespace fas {

void validate(const SyntheticSpec& spec) {
  if (!(spec.separation >= 0.0)) {
    throw InvalidInput("synthetic: separation must be >= 0");
  }
  if (!(spec.noise > 0.0)) {
    throw InvalidInput("synthetic: noise must be > 0");
  }
  if (spec.dim < 1 || spec.frames < 1 || spec.segment_length < 1) {
    throw InvalidInput("synthetic: dim, frames and segment_length must be >= 1");
  }
}

std::vector<FeatureSequence> generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  RngStream rng(spec.seed);
  Vector<double> base(spec.dim);
  for (Eigen::Index k = 0; k < spec.dim; ++k) base(k) = rng.normal();

  const auto indices = select_frames(spec.frames * spec.segment_length,
                                     SamplerConfig{spec.segment_length})
                           .indices;
  const double omega = 2.0 * std::numbers::pi / static_cast<double>(spec.frames);

  std::vector<FeatureSequence> out;
  out.reserve(2 * spec.videos_per_class);
  for (std::size_t v = 0; v < 2 * spec.videos_per_class; ++v) {
    FeatureSequence seq;
    seq.label = v % 2 == 0 ? Label::Live : Label::Attack;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%06zu", v);
    seq.video_id = id;
    seq.frame_indices = indices;
    seq.values.resize(spec.frames, spec.dim);

    // Phases are drawn for both classes so the stream layout is label-independent.
    Vector<double> phase(spec.dim);
    for (Eigen::Index k = 0; k < spec.dim; ++k) phase(k) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amplitude = seq.label == Label::Live ? spec.separation : 0.0;
    for (std::uint32_t t = 0; t < spec.frames; ++t) {
      for (Eigen::Index k = 0; k < spec.dim; ++k) {
        const double drift = amplitude * std::sin(omega * t + phase(k));
        seq.values(t, k) = static_cast<float>(base(k) + drift + spec.noise * rng.normal());
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

ProtocolConfig write_synthetic_protocol(const std::filesystem::path& dir,
                                        const SyntheticProtocolSpec& spec) {
  if (spec.sources.empty()) {
    throw InvalidInput("synthetic protocol: no source datasets");
  }
  if (spec.train_videos < 2 * spec.sources.size() || spec.source_test_videos < 2 ||
      spec.target_test_videos < 2) {
    throw InvalidInput("synthetic protocol: too few videos for the requested splits");
  }
  const std::size_t total = spec.train_videos + spec.source_test_videos + spec.target_test_videos;
  SyntheticSpec data = spec.data;
  data.videos_per_class = (total + 1) / 2;
  const auto videos = generate_synthetic(data);

  ProtocolConfig config;
  config.source_datasets = spec.sources;
  config.target_dataset = spec.target;
  for (const auto& s : spec.sources) config.name += s;
  config.name += "_to_" + spec.target;
  for (const auto& s : spec.sources) {
    if (s == spec.target) {
      throw InvalidInput("synthetic protocol: target '" + spec.target + "' is also a source");
    }
  }

  std::filesystem::create_directories(dir / "manifests");
  std::map<std::string, std::vector<ManifestRow>> train_rows;
  std::map<std::string, std::vector<ManifestRow>> test_rows;

  auto emit = [&](const FeatureSequence& seq, const std::string& tag, bool train) {
    const auto rel = std::filesystem::path("data") / tag / (seq.video_id + ".fseq");
    std::filesystem::create_directories(dir / rel.parent_path());
    write_fseq(seq, dir / rel);
    auto& rows = train ? train_rows[tag] : test_rows[tag];
    rows.push_back({std::filesystem::path("..") / rel, seq.label, tag, seq.video_id});
  };

  std::size_t next = 0;
  for (std::size_t i = 0; i < spec.train_videos; ++i, ++next) {
    emit(videos[next], spec.sources[i % spec.sources.size()], true);
  }
  for (std::size_t i = 0; i < spec.source_test_videos; ++i, ++next) {
    emit(videos[next], spec.sources[i % spec.sources.size()], false);
  }
  for (std::size_t i = 0; i < spec.target_test_videos; ++i, ++next) {
    emit(videos[next], spec.target, false);
  }

  for (const auto& [tag, rows] : train_rows) {
    const auto rel = std::filesystem::path("manifests") / (tag + "_train.csv");
    write_manifest(dir / rel, rows);
    config.train_manifests[tag] = rel;
  }
  for (const auto& [tag, rows] : test_rows) {
    const auto rel = std::filesystem::path("manifests") / (tag + "_test.csv");
    write_manifest(dir / rel, rows);
    config.test_manifests[tag] = rel;
  }
  write_protocol(dir / "protocol.txt", config);
  return read_protocol(dir / "protocol.txt");
}

}  // namespace fas
