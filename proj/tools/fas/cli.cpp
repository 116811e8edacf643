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

#include "fas/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "fas/dataio.hpp"
#include "fas/ensemble.hpp"
#include "fas/error.hpp"
#include "fas/evaluation.hpp"
#include "fas/frame_sampler.hpp"
#include "fas/rng.hpp"
#include "fas/synthetic.hpp"
#include "fas/trainer.hpp"

namespace fas::cli {
namespace {

struct SamplePlanArgs {
  std::uint32_t frames = 0;
  std::uint32_t segment = 30;
};

struct SynthArgs {
  std::string out_dir;
  SyntheticProtocolSpec spec;
  std::string sources = "O,C,I";
};

struct TrainArgs {
  std::string protocol;
  std::string out;
  std::string history;
  EnsembleConfig config;
  std::string combiner = "meta";
  double val_fraction = 0.2;
  double max_grad_norm = 0.0;
};

struct EvaluateArgs {
  std::string model;
  std::string protocol;
  std::string report;
  std::string combiner;
};

struct PredictArgs {
  std::string model;
  std::string input;
  std::string manifest;
  std::string combiner;
};

struct RocExportArgs {
  std::string report;
  std::string out;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::optional<Combiner> combiner_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto c = parse_combiner(text);
  if (!c) throw InvalidInput("unknown combiner '" + text + "' (expected meta or sum)");
  return c;
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << contents;
  if (!f) throw IoError("error writing " + path);
}

int cmd_sample_plan(const SamplePlanArgs& a, std::ostream& out) {
  const auto selection = select_frames(a.frames, SamplerConfig{a.segment});
  for (std::size_t i = 0; i < selection.indices.size(); ++i) {
    out << (i ? " " : "") << selection.indices[i];
  }
  out << '\n';
  return kOk;
}

int cmd_synth(SynthArgs a, std::ostream& out) {
  a.spec.sources = split_list(a.sources);
  const auto config = write_synthetic_protocol(a.out_dir, a.spec);
  out << "wrote synthetic protocol " << config.name << " to " << a.out_dir << "/protocol.txt\n";
  return kOk;
}

int cmd_train(TrainArgs a, std::ostream& out) {
  if (const auto c = combiner_flag(a.combiner)) a.config.combiner = *c;
  if (a.max_grad_norm > 0.0) a.config.base.max_gradient_norm = a.max_grad_norm;

  const auto protocol = read_protocol(a.protocol);
  const auto data = load_protocol(protocol);
  if (data.train.empty()) {
    throw InvalidInput("protocol '" + protocol.name + "' has no training videos");
  }
  const auto split =
      stratified_split(data.train, a.val_fraction, derive_seed(a.config.seed, "validation-split"));
  const auto train_set = gather<FeatureSequence>(data.train, split.kept);
  const auto val_set = gather<FeatureSequence>(data.train, split.held_out);

  const auto result = train_ensemble(train_set, val_set, a.config);
  save_ensemble(result.model, a.out);

  if (!a.history.empty()) {
    std::ostringstream history;
    const std::array<std::string_view, 4> names = {"LSTM", "BILSTM", "GRU", "META"};
    for (std::size_t i = 0; i < names.size(); ++i) {
      write_history(history, names[i], result.histories[i], i == 0);
    }
    write_text(a.history, history.str());
  }

  out << "trained ensemble on " << train_set.size() << " videos (" << val_set.size()
      << " validation) for protocol " << protocol.name << '\n';
  const std::array<std::string_view, 4> names = {"LSTM", "BILSTM", "GRU", "META"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& h = result.histories[i];
    out << "  " << names[i] << ": " << h.iteration_loss.size() << " iterations, "
        << to_string(h.stop_reason) << ", best val_loss "
        << format_score(h.checks.at(h.best_check_index).loss) << '\n';
  }
  out << "model written to " << a.out << '\n';
  return kOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  auto ensemble = load_ensemble(a.model);
  if (const auto c = combiner_flag(a.combiner)) ensemble.config.combiner = *c;
  const auto protocol = read_protocol(a.protocol);
  const auto data = load_protocol(protocol);

  const auto source = score_sequences(ensemble, data.source_test, join(protocol.source_datasets, "+"));
  const auto target = score_sequences(ensemble, data.target_test, protocol.target_dataset);
  EvalReport report = evaluate_protocol(source, target);
  report.protocol = protocol.name;
  write_text(a.report, format_report(report));

  if (report.inverted_source_ordering) {
    err << "warning: source EER above 0.5; scores rank live above attack\n";
  }
  out << protocol.name << ": EER(source) " << format_score(report.eer) << " @ "
      << format_score(report.eer_threshold) << ", HTER(target) " << format_score(report.hter)
      << ", AUC(target) " << format_score(report.auc) << '\n';
  return kOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto ensemble = load_ensemble(a.model);
  const auto combiner = combiner_flag(a.combiner);
  auto emit = [&](const FeatureSequence& seq) {
    if (seq.dim() != ensemble.input_dim()) {
      throw InvalidInput("'" + seq.video_id + "' has feature dim " + std::to_string(seq.dim()) +
                         " but the model expects dim " + std::to_string(ensemble.input_dim()));
    }
    out << seq.video_id << ' ' << format_score(predict(ensemble, seq, combiner)) << '\n';
  };
  if (!a.input.empty()) {
    emit(read_fseq(a.input));
  } else {
    for (const auto& row : read_manifest(a.manifest)) {
      emit(read_fseq(row.fseq_path));
    }
  }
  return kOk;
}

int cmd_roc_export(const RocExportArgs& a) {
  std::ifstream in(a.report, std::ios::binary);
  if (!in) throw IoError("cannot open report " + a.report);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto report = parse_report(buffer.str());
  std::ostringstream table;
  write_roc_table(table, report.roc);
  write_text(a.out, table.str());
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frame-skipping deep ensemble for face presentation attack detection", "fas"};
  app.require_subcommand(1);

  SamplePlanArgs sample_plan;
  auto* sp = app.add_subcommand("sample-plan", "Print the sampled frame indices for a video");
  sp->add_option("--frames", sample_plan.frames, "Total frames in the video")
      ->required()
      ->check(CLI::PositiveNumber);
  sp->add_option("--segment", sample_plan.segment, "Frames per segment")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Materialize a synthetic leave-one-out protocol");
  sy->add_option("--out", synth.out_dir, "Output directory")->required();
  sy->add_option("--seed", synth.spec.data.seed)->capture_default_str();
  sy->add_option("--separation", synth.spec.data.separation, "Live-class drift amplitude")
      ->capture_default_str();
  sy->add_option("--noise", synth.spec.data.noise)->capture_default_str();
  sy->add_option("--dim", synth.spec.data.dim)->check(CLI::PositiveNumber)->capture_default_str();
  sy->add_option("--frames", synth.spec.data.frames, "Frames per video")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sy->add_option("--train", synth.spec.train_videos, "Training videos over all sources")
      ->capture_default_str();
  sy->add_option("--source-test", synth.spec.source_test_videos)->capture_default_str();
  sy->add_option("--target-test", synth.spec.target_test_videos)->capture_default_str();
  sy->add_option("--sources", synth.sources, "Comma-separated source dataset tags")
      ->capture_default_str();
  sy->add_option("--target", synth.spec.target)->capture_default_str();

  TrainArgs train_args;
  auto& tc = train_args.config;
  auto* tr = app.add_subcommand("train", "Train the three base models and the meta-model");
  tr->add_option("--protocol", train_args.protocol, "Protocol config file")->required();
  tr->add_option("--out", train_args.out, "Output ensemble file")->required();
  tr->add_option("--history", train_args.history, "Training history (TSV) output file");
  tr->add_option("--seed", tc.seed)->capture_default_str();
  tr->add_option("--lstm-hidden", tc.lstm_hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--bilstm-hidden", tc.bilstm_hidden)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--gru-hidden", tc.gru_hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--meta-hidden", tc.meta_hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--combiner", train_args.combiner, "meta or sum")
      ->check(CLI::IsMember({"meta", "sum"}))
      ->capture_default_str();
  tr->add_option("--learning-rate", tc.base.learning_rate)->capture_default_str();
  tr->add_option("--batch-size", tc.base.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--validation-frequency", tc.base.validation_frequency)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--patience", tc.base.patience)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--max-epochs", tc.base.max_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--meta-max-epochs", tc.meta_max_epochs)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--stacking-fraction", tc.stacking_split_fraction)->capture_default_str();
  tr->add_option("--val-fraction", train_args.val_fraction,
                 "Share of the training pool held out for early stopping")
      ->capture_default_str();
  tr->add_option("--max-grad-norm", train_args.max_grad_norm, "Global gradient-norm clip (0 = off)")
      ->capture_default_str();
  tr->add_flag("--zscore", tc.zscore, "Z-score features with training-pool statistics");

  EvaluateArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "EER on source test, HTER/AUC on the target");
  ev->add_option("--model", eval_args.model)->required();
  ev->add_option("--protocol", eval_args.protocol)->required();
  ev->add_option("--report", eval_args.report, "Report output file")->required();
  ev->add_option("--combiner", eval_args.combiner, "Override the stored combiner")
      ->check(CLI::IsMember({"meta", "sum"}));

  PredictArgs predict_args;
  auto* pr = app.add_subcommand("predict", "Print 'video_id score' per input sequence");
  pr->add_option("--model", predict_args.model)->required();
  auto* input_opt = pr->add_option("--input", predict_args.input, "One FSEQ file");
  auto* manifest_opt = pr->add_option("--manifest", predict_args.manifest, "Manifest of FSEQ files");
  input_opt->excludes(manifest_opt);
  pr->add_option("--combiner", predict_args.combiner)->check(CLI::IsMember({"meta", "sum"}));

  RocExportArgs roc_args;
  auto* ro = app.add_subcommand("roc-export", "Extract the ROC table from a report");
  ro->add_option("--report", roc_args.report)->required();
  ro->add_option("--out", roc_args.out)->required();

  std::vector<const char*> argv;
  argv.push_back("fas");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (pr->parsed() && predict_args.input.empty() && predict_args.manifest.empty()) {
      throw CLI::RequiredError("--input or --manifest");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sp->parsed()) return cmd_sample_plan(sample_plan, out);
    if (sy->parsed()) return cmd_synth(synth, out);
    if (tr->parsed()) return cmd_train(train_args, out);
    if (ev->parsed()) return cmd_evaluate(eval_args, out, err);
    if (pr->parsed()) return cmd_predict(predict_args, out);
    if (ro->parsed()) return cmd_roc_export(roc_args);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace fas::cli
