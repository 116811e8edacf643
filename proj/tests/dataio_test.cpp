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

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fas/error.hpp"
#include "fas/evaluation.hpp"
#include "fas/synthetic.hpp"
#include "fas/trainer.hpp"
#include "support/test_support.hpp"

namespace fas {
namespace {

using testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(Fseq, RoundTripFullSizeSequence) {
  TempDir dir;
  RngStream rng(1);
  const auto seq = testing::random_sequence(rng, 7, 1920, "replay_001");
  write_fseq(seq, dir / "a.fseq");
  const auto back = read_fseq(dir / "a.fseq");
  EXPECT_EQ(back, seq);
  write_fseq(back, dir / "b.fseq");
  EXPECT_EQ(slurp(dir / "a.fseq"), slurp(dir / "b.fseq"));
  EXPECT_EQ(std::filesystem::file_size(dir / "a.fseq"),
            4u + 4 + 4 + 4 + 1 + 4 + 10 + 7 * 4 + 7 * 1920 * 4);
}

TEST(Fseq, RandomShapesRoundTrip) {
  RngStream rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto frames = 1 + static_cast<Eigen::Index>(rng.below(12));
    const auto dim = 1 + static_cast<Eigen::Index>(rng.below(64));
    const auto seq = testing::random_sequence(rng, frames, dim, "v" + std::to_string(trial));
    const auto bytes = encode_fseq(seq);
    const auto back = decode_fseq(bytes);
    ASSERT_EQ(back, seq);
    ASSERT_EQ(encode_fseq(back), bytes);
  }
}

TEST(Fseq, TruncationNamesLengths) {
  RngStream rng(3);
  const auto bytes = encode_fseq(testing::random_sequence(rng, 7, 16));
  const auto cut = std::string_view(bytes).substr(0, bytes.size() - 10);
  try {
    decode_fseq(cut);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("expected"), std::string::npos) << what;
    const std::size_t payload = 7 * 4 + 7 * 16 * 4;
    EXPECT_NE(what.find("expected " + std::to_string(payload)), std::string::npos) << what;
    EXPECT_NE(what.find(std::to_string(payload - 10) + " available"), std::string::npos) << what;
  }
  for (std::size_t n = 0; n < bytes.size(); n += 7) {
    EXPECT_THROW(decode_fseq(std::string_view(bytes).substr(0, n)), FormatError) << n;
  }
}

TEST(Fseq, HeaderViolationsRejected) {
  RngStream rng(4);
  const auto good = encode_fseq(testing::random_sequence(rng, 2, 3));
  auto patch = [&](std::size_t offset, std::uint8_t value) {
    auto b = good;
    b[offset] = static_cast<char>(value);
    return b;
  };
  EXPECT_THROW(decode_fseq(patch(0, 'X')), FormatError);
  EXPECT_THROW(decode_fseq(patch(4, 2)), FormatError);   // version
  auto zero_dim = good;
  zero_dim.replace(8, 4, std::string(4, '\0'));
  try {
    decode_fseq(zero_dim);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  auto zero_frames = good;
  zero_frames.replace(12, 4, std::string(4, '\0'));
  EXPECT_THROW(decode_fseq(zero_frames), FormatError);
  EXPECT_THROW(decode_fseq(patch(16, 2)), FormatError);  // label
  EXPECT_THROW(decode_fseq(good + "z"), FormatError);
}

TEST(Fseq, NanPayloadIsIntegrityError) {
  RngStream rng(5);
  auto seq = testing::random_sequence(rng, 2, 3);
  auto bytes = encode_fseq(seq);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
  EXPECT_THROW(decode_fseq(bytes), IntegrityError);
  seq.values(0, 0) = nan;
  EXPECT_THROW(encode_fseq(seq), Error);
}

TEST(Fseq, NonIncreasingIndicesRejected) {
  RngStream rng(6);
  auto seq = testing::random_sequence(rng, 3, 2);
  seq.frame_indices[2] = seq.frame_indices[1];
  EXPECT_THROW(validate(seq), InvalidInput);
}

TEST(Fseq, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW(read_fseq(dir / "nope.fseq"), IoError);
}

// Writes `count` sequences for `tag` and a manifest listing them.
std::filesystem::path write_split(const TempDir& dir, const std::string& tag,
                                  const std::string& split, std::size_t count) {
  RngStream rng(derive_seed(9, tag + split));
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string id = tag + "_" + split + "_" + std::to_string(i);
    auto seq = testing::random_sequence(rng, 3, 4, id);
    write_fseq(seq, dir / "data" / (id + ".fseq"));
    rows.push_back({"../data/" + id + ".fseq", seq.label, tag, "s" + std::to_string(i % 3)});
  }
  const auto path = dir / "manifests" / (tag + "_" + split + ".csv");
  std::filesystem::create_directories(path.parent_path());
  write_manifest(path, rows);
  return path;
}

ProtocolConfig oci_to_m(const TempDir& dir, std::size_t per_source, std::size_t target) {
  ProtocolConfig cfg;
  cfg.name = "OCI_to_M";
  cfg.source_datasets = {"O", "C", "I"};
  cfg.target_dataset = "M";
  std::filesystem::create_directories(dir / "data");
  for (const auto& tag : cfg.source_datasets) {
    cfg.train_manifests[tag] = write_split(dir, tag, "train", per_source);
    cfg.test_manifests[tag] = write_split(dir, tag, "test", 2);
  }
  cfg.test_manifests["M"] = write_split(dir, "M", "test", target);
  return cfg;
}

TEST(Protocol, PoolsSources) {
  TempDir dir;
  const auto cfg = oci_to_m(dir, 10, 8);
  write_protocol(dir / "protocol.txt", cfg);
  const auto data = load_protocol(read_protocol(dir / "protocol.txt"));
  EXPECT_EQ(data.train.size(), 30u);
  EXPECT_EQ(data.source_test.size(), 6u);
  EXPECT_EQ(data.target_test.size(), 8u);
  for (const auto& s : data.target_test) EXPECT_EQ(s.video_id.substr(0, 2), "M_");
}

TEST(Protocol, TargetAmongSourcesRejected) {
  TempDir dir;
  auto cfg = oci_to_m(dir, 1, 1);
  cfg.source_datasets.push_back("M");
  cfg.train_manifests["M"] = cfg.train_manifests["O"];
  EXPECT_THROW(validate(cfg), InvalidInput);
  spit(dir / "bad.txt",
       "format_version = 1\nname = x\nsources = O,M\ntarget = M\ntrain.O = a\ntrain.M = b\n"
       "test.O = c\ntest.M = d\n");
  EXPECT_THROW(read_protocol(dir / "bad.txt"), InvalidInput);
}

TEST(Protocol, ConfigTextRoundTrip) {
  TempDir dir;
  spit(dir / "p.txt",
       "# leave-one-out\nformat_version = 1\nname = OCI_to_M\nsources = O,C,I\ntarget = M\n"
       "train.O = m/O_train.csv\ntrain.C = m/C_train.csv\ntrain.I = m/I_train.csv\n"
       "test.O = m/O_test.csv\ntest.C = m/C_test.csv\ntest.I = m/I_test.csv\n"
       "test.M = m/M_test.csv\n");
  const auto cfg = read_protocol(dir / "p.txt");
  EXPECT_EQ(cfg.source_datasets, (std::vector<std::string>{"O", "C", "I"}));
  EXPECT_EQ(cfg.train_manifests.at("C"), dir / "m/C_train.csv");
  write_protocol(dir / "q.txt", cfg);
  const auto again = read_protocol(dir / "q.txt");
  EXPECT_EQ(again.test_manifests, cfg.test_manifests);
  EXPECT_EQ(again.name, cfg.name);
}

TEST(Manifest, UnknownLabelNamesRow) {
  TempDir dir;
  spit(dir / "m.csv", std::string(kManifestHeader) + "\na.fseq,live,O,s1\nb.fseq,spoof,O,s2\n");
  const auto what = error_of([&] { read_manifest(dir / "m.csv"); });
  EXPECT_NE(what.find("row 3"), std::string::npos) << what;
  EXPECT_THROW(read_manifest(dir / "m.csv"), FormatError);
}

TEST(Manifest, RoundTripResolvesRelativePaths) {
  TempDir dir;
  const std::vector<ManifestRow> rows = {{"x/a.fseq", Label::Live, "O", "s1"},
                                         {"b.fseq", Label::Attack, "O", "s2"}};
  std::filesystem::create_directories(dir / "sub");
  write_manifest(dir / "sub" / "m.csv", rows);
  const auto back = read_manifest(dir / "sub" / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].fseq_path, dir / "sub" / "x/a.fseq");
  EXPECT_EQ(back[1].label, Label::Attack);
  EXPECT_EQ(back[1].subject_id, "s2");
}

TEST(Protocol, MissingFilesListedTogether) {
  TempDir dir;
  const auto cfg = oci_to_m(dir, 3, 2);
  std::filesystem::remove(dir / "data" / "O_train_1.fseq");
  std::filesystem::remove(dir / "data" / "M_test_0.fseq");
  std::filesystem::remove(cfg.train_manifests.at("C"));
  const auto what = error_of([&] { load_protocol(cfg); });
  EXPECT_NE(what.find("O_train_1.fseq"), std::string::npos) << what;
  EXPECT_NE(what.find("M_test_0.fseq"), std::string::npos) << what;
  EXPECT_NE(what.find("C_train.csv"), std::string::npos) << what;
  EXPECT_THROW(load_protocol(cfg), IoError);
}

TEST(Protocol, FileLabelMustMatchManifest) {
  TempDir dir;
  RngStream rng(1);
  auto seq = testing::random_sequence(rng, 2, 2, "a");
  seq.label = Label::Live;
  write_fseq(seq, dir / "a.fseq");
  const std::vector<ManifestRow> rows = {{dir / "a.fseq", Label::Attack, "O", "s"}};
  EXPECT_THROW(load_sequences(rows), IntegrityError);
}

TEST(Split, StratifiedAndDeterministic) {
  SyntheticSpec spec;
  spec.videos_per_class = 40;
  spec.dim = 2;
  const auto items = generate_synthetic(spec);
  const auto a = stratified_split(items, 0.25, 5);
  const auto b = stratified_split(items, 0.25, 5);
  EXPECT_EQ(a.kept, b.kept);
  EXPECT_EQ(a.held_out, b.held_out);
  EXPECT_EQ(a.held_out.size(), 20u);
  std::size_t live = 0;
  for (const auto i : a.held_out) live += items[i].label == Label::Live;
  EXPECT_EQ(live, 10u);
  std::set<std::size_t> all(a.kept.begin(), a.kept.end());
  all.insert(a.held_out.begin(), a.held_out.end());
  EXPECT_EQ(all.size(), items.size());
  EXPECT_TRUE(std::is_sorted(a.kept.begin(), a.kept.end()));
  EXPECT_NE(stratified_split(items, 0.25, 6).held_out, a.held_out);
  EXPECT_THROW(stratified_split(items, 0.0, 5), InvalidInput);
}

TEST(Normalizer, ZeroMeanUnitVariance) {
  SyntheticSpec spec;
  spec.videos_per_class = 20;
  const auto items = generate_synthetic(spec);
  const auto norm = FeatureNormalizer::fit(items);
  Vector<double> sum = Vector<double>::Zero(spec.dim), sq = sum;
  double n = 0;
  for (const auto& s : items) {
    const Matrix<double> z = norm.apply(s.values).cast<double>();
    sum += z.colwise().sum().transpose();
    sq += z.array().square().matrix().colwise().sum().transpose();
    n += static_cast<double>(z.rows());
  }
  EXPECT_LT((sum / n).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT(((sq / n).array() - 1.0).abs().maxCoeff(), 1e-3);
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec spec;
  spec.videos_per_class = 10;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(encode_fseq(a[i]), encode_fseq(b[i]));
  spec.seed = 43;
  EXPECT_NE(encode_fseq(generate_synthetic(spec)[0]), encode_fseq(a[0]));
}

TEST(Synthetic, ShapesAndIndices) {
  SyntheticSpec spec;
  spec.videos_per_class = 3;
  const auto a = generate_synthetic(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, i % 2 == 0 ? Label::Live : Label::Attack);
    EXPECT_EQ(a[i].frames(), 7);
    EXPECT_EQ(a[i].dim(), 16);
    EXPECT_EQ(a[i].frame_indices, (std::vector<std::uint32_t>{29, 59, 89, 119, 149, 179, 209}));
  }
}

TEST(Synthetic, ProtocolOnDisk) {
  TempDir dir;
  SyntheticProtocolSpec spec;
  spec.train_videos = 12;
  spec.source_test_videos = 6;
  spec.target_test_videos = 4;
  const auto cfg = write_synthetic_protocol(dir.path(), spec);
  EXPECT_EQ(cfg.name, "OCI_to_M");
  const auto data = load_protocol(cfg);
  EXPECT_EQ(data.train.size(), 12u);
  EXPECT_EQ(data.source_test.size(), 6u);
  EXPECT_EQ(data.target_test.size(), 4u);
}

double lstm_target_auc(double separation, std::size_t train_per_class, std::size_t test_per_class,
                       std::size_t max_epochs) {
  SyntheticSpec spec;
  spec.separation = separation;
  const auto [train_set, test_set] =
      testing::synthetic_pools(spec, train_per_class, test_per_class);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = max_epochs;
  cfg.seed = 1;
  RngStream rng(2);
  const auto split = stratified_split(train_set, 0.2, 3);
  const auto result = train(SequenceModel<float>::initialized(CellKind::Lstm, 16, 32, rng),
                            gather<FeatureSequence>(train_set, split.kept),
                            gather<FeatureSequence>(train_set, split.held_out), cfg);
  ScoreSet scores;
  for (const auto& s : test_set) {
    scores.entries.push_back({s.video_id, predict_proba(result.model, s.values).p_attack, s.label});
  }
  return auc(roc_curve(scores));
}

TEST(Synthetic, IndistinguishableClassesGiveChanceAuc) {
  const double a = lstm_target_auc(0.0, 200, 500, 20);
  EXPECT_GE(a, 0.4);
  EXPECT_LE(a, 0.6);
}

TEST(Synthetic, SeparableByOracleThenByLstm) {
  const auto [train_set, test_set] = testing::synthetic_pools(SyntheticSpec{}, 200, 50);
  ASSERT_GE(testing::nearest_centroid_auc(train_set, test_set), 0.95);
  EXPECT_GE(lstm_target_auc(5.0, 200, 50, 100), 0.95);
}

}  // namespace
}  // namespace fas
