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

#include "fas/ensemble.hpp"

#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "fas/error.hpp"
#include "fas/model_io.hpp"
#include "fas/rng.hpp"
#include "text.hpp"

namespace fas {
namespace {

constexpr std::string_view kEnsembleMagic = "FENS";
constexpr std::string_view kOrder = "LSTM,BILSTM,GRU,META";

// Rethrows the in-flight library error with `context` prefixed, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(context + ": " + e.what(), e.offset());
  } catch (const InvalidInput& e) {
    throw InvalidInput(context + ": " + e.what());
  } catch (const IntegrityError& e) {
    throw IntegrityError(context + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(context + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(context + ": " + e.what());
  }
}

std::vector<FeatureSequence> normalized(std::span<const FeatureSequence> items,
                                        const FeatureNormalizer& normalizer) {
  std::vector<FeatureSequence> out(items.begin(), items.end());
  if (!normalizer.empty()) {
    for (auto& seq : out) seq.values = normalizer.apply(seq.values);
  }
  return out;
}

std::vector<FeatureSequence> stack(std::span<const SequenceModel<float>> base_models,
                                   std::span<const FeatureSequence> items) {
  std::vector<FeatureSequence> out;
  out.reserve(items.size());
  for (const auto& seq : items) {
    FeatureSequence meta;
    meta.video_id = seq.video_id;
    meta.label = seq.label;
    meta.frame_indices = {0, 1, 2};
    meta.values = build_meta_features(base_models, seq.values);
    out.push_back(std::move(meta));
  }
  return out;
}

Eigen::Index hidden_for(const EnsembleConfig& config, CellKind kind) {
  switch (kind) {
    case CellKind::Lstm:
      return config.lstm_hidden;
    case CellKind::BiLstm:
      return config.bilstm_hidden;
    case CellKind::Gru:
      return config.gru_hidden;
  }
  return 0;
}

std::string encode_manifest(const EnsembleConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  out << "format_version=" << kEnsembleFormatVersion << '\n';
  out << "order=" << kOrder << '\n';
  out << "combiner=" << to_string(c.combiner) << '\n';
  out << "lstm_hidden=" << c.lstm_hidden << '\n';
  out << "bilstm_hidden=" << c.bilstm_hidden << '\n';
  out << "gru_hidden=" << c.gru_hidden << '\n';
  out << "meta_hidden=" << c.meta_hidden << '\n';
  out << "meta_max_epochs=" << c.meta_max_epochs << '\n';
  out << "stacking_split_fraction=" << format_double(c.stacking_split_fraction) << '\n';
  out << "seed=" << c.seed << '\n';
  out << "zscore=" << (c.zscore ? 1 : 0) << '\n';
  out << "learning_rate=" << format_double(c.base.learning_rate) << '\n';
  out << "batch_size=" << c.base.batch_size << '\n';
  out << "validation_frequency=" << c.base.validation_frequency << '\n';
  out << "patience=" << c.base.patience << '\n';
  out << "max_epochs=" << c.base.max_epochs << '\n';
  out << "min_improvement=" << format_double(c.base.min_improvement) << '\n';
  out << "max_gradient_norm="
      << (c.base.max_gradient_norm ? format_double(*c.base.max_gradient_norm) : "none") << '\n';
  out << "adam_beta1=" << format_double(c.base.adam.beta1) << '\n';
  out << "adam_beta2=" << format_double(c.base.adam.beta2) << '\n';
  out << "adam_epsilon=" << format_double(c.base.adam.epsilon) << '\n';
  return out.str();
}

EnsembleConfig decode_manifest(std::string_view text, std::size_t offset) {
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("ensemble manifest line without '=': " + line, offset);
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw FormatError("ensemble manifest is missing '" + std::string(key) + "'", offset);
    }
    return it->second;
  };
  auto num = [&]<typename T>(std::string_view key, T) {
    const auto v = detail::parse_number<T>(get(key));
    if (!v) {
      throw FormatError("ensemble manifest has bad value for '" + std::string(key) + "'", offset);
    }
    return *v;
  };

  if (get("format_version") != std::to_string(kEnsembleFormatVersion)) {
    throw FormatError("unsupported ensemble manifest version " + get("format_version"), offset);
  }
  if (get("order") != kOrder) {
    throw FormatError("unexpected model order '" + get("order") + "'", offset);
  }
  EnsembleConfig c;
  const auto combiner = parse_combiner(get("combiner"));
  if (!combiner) throw FormatError("unknown combiner '" + get("combiner") + "'", offset);
  c.combiner = *combiner;
  c.lstm_hidden = num("lstm_hidden", Eigen::Index{});
  c.bilstm_hidden = num("bilstm_hidden", Eigen::Index{});
  c.gru_hidden = num("gru_hidden", Eigen::Index{});
  c.meta_hidden = num("meta_hidden", Eigen::Index{});
  c.meta_max_epochs = num("meta_max_epochs", std::size_t{});
  c.stacking_split_fraction = num("stacking_split_fraction", double{});
  c.seed = num("seed", std::uint64_t{});
  c.zscore = num("zscore", int{}) != 0;
  c.base.learning_rate = num("learning_rate", double{});
  c.base.batch_size = num("batch_size", std::size_t{});
  c.base.validation_frequency = num("validation_frequency", std::size_t{});
  c.base.patience = num("patience", std::size_t{});
  c.base.max_epochs = num("max_epochs", std::size_t{});
  c.base.min_improvement = num("min_improvement", double{});
  if (get("max_gradient_norm") != "none") {
    c.base.max_gradient_norm = num("max_gradient_norm", double{});
  }
  c.base.adam.beta1 = num("adam_beta1", double{});
  c.base.adam.beta2 = num("adam_beta2", double{});
  c.base.adam.epsilon = num("adam_epsilon", double{});
  return c;
}

}  // namespace

std::string_view to_string(Combiner combiner) {
  return combiner == Combiner::Meta ? "meta" : "sum";
}

std::optional<Combiner> parse_combiner(std::string_view text) {
  if (text == "meta") return Combiner::Meta;
  if (text == "sum") return Combiner::Sum;
  return std::nullopt;
}

void validate(const EnsembleConfig& config) {
  if (config.lstm_hidden < 1 || config.bilstm_hidden < 1 || config.gru_hidden < 1 ||
      config.meta_hidden < 1) {
    throw InvalidInput("ensemble config: hidden sizes must be >= 1");
  }
  if (config.meta_max_epochs < 1) {
    throw InvalidInput("ensemble config: meta_max_epochs must be >= 1");
  }
  if (!(config.stacking_split_fraction > 0.0 && config.stacking_split_fraction < 1.0)) {
    throw InvalidInput("ensemble config: stacking_split_fraction must be in (0, 1)");
  }
  validate(config.base);
}

Matrix<float> meta_features(std::span<const ClassProbabilities> base_probabilities) {
  if (base_probabilities.size() != kBaseOrder.size()) {
    throw InvalidInput("meta features need exactly " + std::to_string(kBaseOrder.size()) +
                       " base predictions");
  }
  Matrix<float> out(static_cast<Eigen::Index>(base_probabilities.size()), 2);
  for (std::size_t i = 0; i < base_probabilities.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = static_cast<float>(base_probabilities[i].p_live);
    out(static_cast<Eigen::Index>(i), 1) = static_cast<float>(base_probabilities[i].p_attack);
  }
  return out;
}

Matrix<float> build_meta_features(std::span<const SequenceModel<float>> base_models,
                                  const Matrix<float>& frames) {
  if (base_models.size() != kBaseOrder.size()) {
    throw InvalidInput("ensemble needs exactly three base models");
  }
  std::array<ClassProbabilities, kBaseOrder.size()> probs;
  for (std::size_t i = 0; i < base_models.size(); ++i) {
    if (base_models[i].kind() != kBaseOrder[i]) {
      throw InvalidInput("base model " + std::to_string(i) + " is " +
                         std::string(to_string(base_models[i].kind())) + ", expected " +
                         std::string(to_string(kBaseOrder[i])));
    }
    probs[i] = predict_proba(base_models[i], frames);
  }
  return meta_features(probs);
}

EnsembleTrainResult train_ensemble(std::span<const FeatureSequence> train_set,
                                   std::span<const FeatureSequence> val_set,
                                   const EnsembleConfig& config) {
  validate(config);
  if (train_set.empty() || val_set.empty()) {
    throw InvalidInput("train_ensemble: training and validation sets must be non-empty");
  }
  const Eigen::Index dim = train_set.front().dim();
  for (const auto& set : {train_set, val_set}) {
    for (const auto& seq : set) {
      if (seq.dim() != dim) {
        throw InvalidInput("train_ensemble: sequence '" + seq.video_id + "' has dim " +
                           std::to_string(seq.dim()) + ", expected " + std::to_string(dim));
      }
    }
  }

  EnsembleTrainResult result;
  auto& model = result.model;
  model.config = config;
  if (config.zscore) model.normalizer = FeatureNormalizer::fit(train_set);

  const auto train_norm = normalized(train_set, model.normalizer);
  const auto val_norm = normalized(val_set, model.normalizer);

  result.stacking_split = stratified_split(train_norm, config.stacking_split_fraction,
                                           derive_seed(config.seed, "stacking-split"));
  const auto base_part = gather<FeatureSequence>(train_norm, result.stacking_split.kept);
  const auto stack_part = gather<FeatureSequence>(train_norm, result.stacking_split.held_out);

  for (std::size_t i = 0; i < kBaseOrder.size(); ++i) {
    const CellKind kind = kBaseOrder[i];
    const std::string name(to_string(kind));
    try {
      RngStream init_rng(derive_seed(config.seed, "init/" + name));
      auto initial = SequenceModel<float>::initialized(kind, dim, hidden_for(config, kind),
                                                       init_rng);
      TrainConfig tc = config.base;
      tc.seed = derive_seed(config.seed, "train/" + name);
      auto trained = train(std::move(initial), base_part, val_norm, tc);
      model.base_models.push_back(std::move(trained.model));
      result.histories[i] = std::move(trained.history);
    } catch (const Error&) {
      rethrow_with_context("base model " + name);
    }
  }

  try {
    const auto meta_train = stack(model.base_models, stack_part);
    const auto meta_val = stack(model.base_models, val_norm);
    RngStream init_rng(derive_seed(config.seed, "init/META"));
    auto initial = SequenceModel<float>::initialized(CellKind::Lstm, 2, config.meta_hidden,
                                                     init_rng);
    TrainConfig tc = config.base;
    tc.max_epochs = config.meta_max_epochs;
    tc.seed = derive_seed(config.seed, "train/META");
    auto trained = train(std::move(initial), meta_train, meta_val, tc);
    model.meta_model = std::move(trained.model);
    result.histories[3] = std::move(trained.history);
  } catch (const Error&) {
    rethrow_with_context("meta model");
  }
  return result;
}

double predict(const EnsembleModel& ensemble, const FeatureSequence& sequence,
               std::optional<Combiner> combiner) {
  if (sequence.dim() != ensemble.input_dim()) {
    throw InvalidInput("predict: '" + sequence.video_id + "' has dim " +
                       std::to_string(sequence.dim()) + ", model expects " +
                       std::to_string(ensemble.input_dim()));
  }
  const Matrix<float> frames = ensemble.normalizer.apply(sequence.values);
  const Matrix<float> stacked = build_meta_features(ensemble.base_models, frames);
  if (combiner.value_or(ensemble.config.combiner) == Combiner::Sum) {
    return static_cast<double>(stacked.col(1).cast<double>().mean());
  }
  return predict_proba(ensemble.meta_model, stacked).p_attack;
}

EnsembleModel zero_ensemble(Eigen::Index input_dim, const EnsembleConfig& config) {
  validate(config);
  EnsembleModel model;
  model.config = config;
  for (const CellKind kind : kBaseOrder) {
    model.base_models.emplace_back(kind, input_dim, hidden_for(config, kind));
  }
  model.meta_model = SequenceModel<float>(CellKind::Lstm, 2, config.meta_hidden);
  return model;
}

std::string encode_ensemble(const EnsembleModel& ensemble) {
  if (ensemble.base_models.size() != kBaseOrder.size()) {
    throw InvalidInput("encode_ensemble: ensemble needs exactly three base models");
  }
  for (std::size_t i = 0; i < kBaseOrder.size(); ++i) {
    if (ensemble.base_models[i].kind() != kBaseOrder[i]) {
      throw InvalidInput("encode_ensemble: base models out of order");
    }
  }
  detail::ByteWriter w;
  w.bytes(kEnsembleMagic);
  w.u32(kEnsembleFormatVersion);
  w.str(encode_manifest(ensemble.config));
  if (ensemble.normalizer.empty()) {
    w.u8(0);
  } else {
    const auto& n = ensemble.normalizer;
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(n.mean.size()));
    w.f32_array(std::span<const float>(n.mean.data(), static_cast<std::size_t>(n.mean.size())));
    w.f32_array(
        std::span<const float>(n.inv_std.data(), static_cast<std::size_t>(n.inv_std.size())));
  }
  for (const auto& m : ensemble.base_models) w.str(encode_model(m));
  w.str(encode_model(ensemble.meta_model));
  return w.take();
}

EnsembleModel decode_ensemble(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kEnsembleMagic.size()) != kEnsembleMagic) {
    throw FormatError("bad ensemble magic", 0);
  }
  const std::size_t version_offset = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kEnsembleFormatVersion) {
    throw FormatError("unsupported ensemble format version " + std::to_string(version),
                      version_offset);
  }
  const std::size_t manifest_offset = r.offset();
  EnsembleModel model;
  model.config = decode_manifest(r.str(), manifest_offset);

  const std::size_t norm_offset = r.offset();
  const std::uint8_t has_norm = r.u8();
  if (has_norm > 1) {
    throw FormatError("bad normalizer flag", norm_offset);
  }
  if (has_norm == 1) {
    const std::uint32_t dim = r.u32();
    model.normalizer.mean.resize(dim);
    model.normalizer.inv_std.resize(dim);
    r.f32_array(std::span<float>(model.normalizer.mean.data(), dim));
    r.f32_array(std::span<float>(model.normalizer.inv_std.data(), dim));
  }

  for (std::size_t i = 0; i < kBaseOrder.size(); ++i) {
    const std::size_t offset = r.offset();
    try {
      model.base_models.push_back(decode_model(r.str()));
    } catch (const FormatError& e) {
      throw FormatError(std::string("base model ") + std::string(to_string(kBaseOrder[i])) +
                            ": " + e.what(),
                        offset + 4 + e.offset());
    }
    if (model.base_models.back().kind() != kBaseOrder[i]) {
      throw FormatError("base model " + std::to_string(i) + " has kind " +
                            std::string(to_string(model.base_models.back().kind())),
                        offset);
    }
  }
  const std::size_t meta_offset = r.offset();
  model.meta_model = decode_model(r.str());
  if (model.meta_model.kind() != CellKind::Lstm || model.meta_model.input_dim() != 2) {
    throw FormatError("meta model must be an LSTM over 2-dim inputs", meta_offset);
  }
  if (!r.at_end()) {
    throw FormatError("trailing bytes after ensemble payload", r.offset());
  }
  const Eigen::Index dim = model.base_models.front().input_dim();
  for (const auto& m : model.base_models) {
    if (m.input_dim() != dim) {
      throw FormatError("base models disagree on input dim", meta_offset);
    }
  }
  if (!model.normalizer.empty() && model.normalizer.mean.size() != dim) {
    throw FormatError("normalizer dim does not match the base models", norm_offset);
  }
  return model;
}

void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& path) {
  detail::write_file(path, encode_ensemble(ensemble));
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_ensemble(bytes);
  } catch (const Error&) {
    rethrow_with_context(path.string());
  }
}

}  // namespace fas
