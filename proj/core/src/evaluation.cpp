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

#include "fas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "fas/ensemble.hpp"
#include "fas/error.hpp"
#include "text.hpp"

namespace fas {
namespace {

struct Counts {
  std::size_t live = 0;
  std::size_t attack = 0;
};

// Distinct scores ascending, with per-class counts at each score.
std::vector<std::pair<double, Counts>> tie_groups(const ScoreSet& scores) {
  std::vector<std::pair<double, Label>> sorted;
  sorted.reserve(scores.entries.size());
  for (const auto& e : scores.entries) sorted.emplace_back(e.score, e.label);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<double, Counts>> groups;
  for (const auto& [score, label] : sorted) {
    if (groups.empty() || groups.back().first != score) groups.push_back({score, {}});
    (label == Label::Live ? groups.back().second.live : groups.back().second.attack) += 1;
  }
  return groups;
}

[[noreturn]] void report_error(const std::string& message, std::size_t line) {
  throw FormatError("report: " + message, line);
}

}  // namespace

std::size_t ScoreSet::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [label](const auto& e) { return e.label == label; }));
}

void validate(const ScoreSet& scores) {
  const std::size_t live = scores.count(Label::Live);
  const std::size_t attack = scores.count(Label::Attack);
  if (live == 0 || attack == 0) {
    throw InvalidInput("score set '" + scores.provenance + "' needs both classes (live=" +
                       std::to_string(live) + ", attack=" + std::to_string(attack) + ")");
  }
  for (const auto& e : scores.entries) {
    if (!std::isfinite(e.score)) {
      throw InvalidInput("score set '" + scores.provenance + "': non-finite score for '" +
                         e.video_id + "'");
    }
  }
}

RocCurve roc_curve(const ScoreSet& scores) {
  validate(scores);
  const auto groups = tie_groups(scores);
  const double n_live = static_cast<double>(scores.count(Label::Live));
  const double n_attack = static_cast<double>(scores.count(Label::Attack));

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t live_above = 0;
  std::size_t attack_above = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    live_above += it->second.live;
    attack_above += it->second.attack;
    curve.fpr.push_back(static_cast<double>(live_above) / n_live);
    curve.tpr.push_back(static_cast<double>(attack_above) / n_attack);
    curve.thresholds.push_back(it->first);
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) * 0.5;
  }
  return area;
}

EerResult eer(const ScoreSet& scores) {
  validate(scores);
  const auto groups = tie_groups(scores);
  const std::size_t n_live = scores.count(Label::Live);
  const std::size_t n_attack = scores.count(Label::Attack);

  // Candidate k leaves the k lowest tie groups below the threshold.
  auto threshold_for = [&](std::size_t k) {
    if (k == 0) return groups.front().first;
    if (k == groups.size()) {
      return std::nextafter(groups.back().first, std::numeric_limits<double>::infinity());
    }
    const double lo = groups[k - 1].first;
    const double hi = groups[k].first;
    return lo + (hi - lo) * 0.5;
  };

  // |FAR - FRR| compared exactly as |a/nA - r/nL| scaled by nA*nL.
  std::size_t live_below = 0;
  std::size_t attack_below = 0;
  std::size_t best_k = 0;
  std::uint64_t best_gap = std::numeric_limits<std::uint64_t>::max();
  std::size_t best_live_below = 0;
  std::size_t best_attack_below = 0;
  for (std::size_t k = 0; k <= groups.size(); ++k) {
    if (k > 0) {
      live_below += groups[k - 1].second.live;
      attack_below += groups[k - 1].second.attack;
    }
    const auto far_scaled = static_cast<std::int64_t>(attack_below * n_live);
    const auto frr_scaled = static_cast<std::int64_t>((n_live - live_below) * n_attack);
    const auto gap = static_cast<std::uint64_t>(std::llabs(far_scaled - frr_scaled));
    if (gap < best_gap) {
      best_gap = gap;
      best_k = k;
      best_live_below = live_below;
      best_attack_below = attack_below;
    }
  }

  EerResult result;
  result.threshold = threshold_for(best_k);
  result.far = static_cast<double>(best_attack_below) / static_cast<double>(n_attack);
  result.frr = static_cast<double>(n_live - best_live_below) / static_cast<double>(n_live);
  result.eer = (result.far + result.frr) / 2.0;
  result.inverted_ordering = result.eer > 0.5;
  return result;
}

ErrorRates hter(const ScoreSet& scores, double threshold) {
  validate(scores);
  if (!std::isfinite(threshold)) {
    throw InvalidInput("hter: threshold must be finite");
  }
  std::size_t attack_accepted = 0;
  std::size_t live_rejected = 0;
  for (const auto& e : scores.entries) {
    if (e.label == Label::Attack && e.score < threshold) ++attack_accepted;
    if (e.label == Label::Live && e.score >= threshold) ++live_rejected;
  }
  ErrorRates rates;
  rates.far = static_cast<double>(attack_accepted) / static_cast<double>(scores.count(Label::Attack));
  rates.frr = static_cast<double>(live_rejected) / static_cast<double>(scores.count(Label::Live));
  rates.hter = (rates.far + rates.frr) / 2.0;
  return rates;
}

EvalReport evaluate_protocol(const ScoreSet& source, const ScoreSet& target) {
  const EerResult source_eer = eer(source);
  const ErrorRates rates = hter(target, source_eer.threshold);
  EvalReport report;
  report.source = source.provenance;
  report.target = target.provenance;
  report.source_videos = source.entries.size();
  report.target_videos = target.entries.size();
  report.eer = source_eer.eer;
  report.eer_threshold = source_eer.threshold;
  report.inverted_source_ordering = source_eer.inverted_ordering;
  report.far = rates.far;
  report.frr = rates.frr;
  report.hter = rates.hter;
  report.roc = roc_curve(target);
  report.auc = auc(report.roc);
  return report;
}

ScoreSet score_sequences(const EnsembleModel& ensemble, std::span<const FeatureSequence> sequences,
                         std::string provenance) {
  ScoreSet scores;
  scores.provenance = std::move(provenance);
  scores.entries.reserve(sequences.size());
  for (const auto& seq : sequences) {
    scores.entries.push_back({seq.video_id, predict(ensemble, seq), seq.label});
  }
  return scores;
}

EvalReport cross_dataset_eval(const EnsembleModel& ensemble,
                              std::span<const FeatureSequence> source_test,
                              std::span<const FeatureSequence> target_test) {
  const ScoreSet source = score_sequences(ensemble, source_test, "source");
  const ScoreSet target = score_sequences(ensemble, target_test, "target");
  return evaluate_protocol(source, target);
}

std::string format_report(const EvalReport& r) {
  using detail::format_double;
  std::ostringstream out;
  out << "format_version: " << kReportFormatVersion << '\n';
  out << "protocol: " << r.protocol << '\n';
  out << "source: " << r.source << '\n';
  out << "target: " << r.target << '\n';
  out << "source_videos: " << r.source_videos << '\n';
  out << "target_videos: " << r.target_videos << '\n';
  out << "eer: " << format_double(r.eer) << '\n';
  out << "eer_threshold: " << format_double(r.eer_threshold) << '\n';
  out << "far: " << format_double(r.far) << '\n';
  out << "frr: " << format_double(r.frr) << '\n';
  out << "hter: " << format_double(r.hter) << '\n';
  out << "auc: " << format_double(r.auc) << '\n';
  out << "inverted_source_ordering: " << (r.inverted_source_ordering ? "true" : "false") << '\n';
  out << "roc_points: " << r.roc.size() << '\n';
  out << "roc:\n";
  write_roc_table(out, r.roc);
  return out.str();
}

void write_roc_table(std::ostream& out, const RocCurve& curve) {
  out << "# fpr\ttpr\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << detail::format_double(curve.fpr[i]) << '\t' << detail::format_double(curve.tpr[i])
        << '\n';
  }
}

EvalReport parse_report(std::string_view text) {
  EvalReport r;
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool in_roc = false;
  auto number = [&](std::string_view s) {
    const auto v = detail::parse_number<double>(s);
    if (!v) report_error("bad number '" + std::string(s) + "'", line_no);
    return *v;
  };
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? text.npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (in_roc) {
      if (line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) report_error("ROC row needs two columns", line_no);
      r.roc.fpr.push_back(number(line.substr(0, tab)));
      r.roc.tpr.push_back(number(line.substr(tab + 1)));
      continue;
    }
    if (line == "roc:") {
      in_roc = true;
      continue;
    }
    const auto colon = line.find(": ");
    if (colon == std::string_view::npos) report_error("expected 'key: value'", line_no);
    fields.emplace(std::string(line.substr(0, colon)), std::string(line.substr(colon + 2)));
  }
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) report_error("missing field '" + std::string(key) + "'", line_no);
    return it->second;
  };
  if (get("format_version") != std::to_string(kReportFormatVersion)) {
    report_error("unsupported format_version " + get("format_version"), line_no);
  }
  r.protocol = get("protocol");
  r.source = get("source");
  r.target = get("target");
  r.source_videos = static_cast<std::size_t>(number(get("source_videos")));
  r.target_videos = static_cast<std::size_t>(number(get("target_videos")));
  r.eer = number(get("eer"));
  r.eer_threshold = number(get("eer_threshold"));
  r.far = number(get("far"));
  r.frr = number(get("frr"));
  r.hter = number(get("hter"));
  r.auc = number(get("auc"));
  r.inverted_source_ordering = get("inverted_source_ordering") == "true";
  if (static_cast<std::size_t>(number(get("roc_points"))) != r.roc.size()) {
    report_error("roc_points does not match the ROC table", line_no);
  }
  return r;
}

}  // namespace fas
