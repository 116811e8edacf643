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

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fas/dataio.hpp"
#include "fas/label.hpp"

namespace fas {

// Biometric metrics. Attack is the positive class: a video is predicted
// attack when score >= threshold.
//   FAR(t) = #{attack : score <  t} / #attack   (attacks accepted as live)
//   FRR(t) = #{live   : score >= t} / #live     (live faces rejected)
//   HTER(t) = (FAR + FRR) / 2

struct ScoreEntry {
  std::string video_id;
  double score = 0.0;
  Label label = Label::Live;
};

struct ScoreSet {
  std::vector<ScoreEntry> entries;
  /// Dataset tag(s) the scores came from.
  std::string provenance;

  std::size_t count(Label label) const;
};

/// Throws InvalidInput unless both classes are present and all scores are finite.
void validate(const ScoreSet& scores);

struct RocCurve {
  /// Parallel arrays. Point 0 is (0, 0) at threshold +inf; each following
  /// point lowers the threshold to the next distinct score (tied scores move
  /// together), ending at (1, 1).
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;

  std::size_t size() const noexcept { return fpr.size(); }
};

RocCurve roc_curve(const ScoreSet& scores);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

struct ErrorRates {
  double far = 0.0;
  double frr = 0.0;
  double hter = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  /// EER above 0.5: the scores rank live above attack.
  bool inverted_ordering = false;
};

/// Equal error rate on the empirical step functions.
///
/// Candidate thresholds are the lowest score (everything attack), the
/// midpoints between consecutive distinct scores, and the value just above the
/// highest score (everything live). The candidate minimizing |FAR - FRR| wins,
/// the smallest threshold on ties, and eer = (FAR + FRR) / 2 there.
EerResult eer(const ScoreSet& scores);

ErrorRates hter(const ScoreSet& scores, double threshold);

struct EvalReport {
  std::string protocol;
  std::string source;
  std::string target;
  std::size_t source_videos = 0;
  std::size_t target_videos = 0;
  /// Equal error rate and its threshold, on the pooled source test scores.
  double eer = 0.0;
  double eer_threshold = 0.0;
  /// Target scores at eer_threshold; hter == (far + frr) / 2.
  double far = 0.0;
  double frr = 0.0;
  double hter = 0.0;
  /// Target ROC and its area.
  double auc = 0.0;
  RocCurve roc;
  bool inverted_source_ordering = false;
};

/// EER threshold from `source`, HTER/FAR/FRR/AUC/ROC on `target`.
EvalReport evaluate_protocol(const ScoreSet& source, const ScoreSet& target);

struct EnsembleModel;

/// Scores every sequence with the ensemble (p_attack).
ScoreSet score_sequences(const EnsembleModel& ensemble, std::span<const FeatureSequence> sequences,
                         std::string provenance);

/// Leave-one-out evaluation: scores both pools, thresholds at the source EER,
/// reports error rates on the unseen target.
EvalReport cross_dataset_eval(const EnsembleModel& ensemble,
                              std::span<const FeatureSequence> source_test,
                              std::span<const FeatureSequence> target_test);

inline constexpr int kReportFormatVersion = 1;

/// `key: value` lines followed by a `roc:` section holding the ROC table.
std::string format_report(const EvalReport& report);
/// Inverse of format_report. Throws FormatError with the line number.
EvalReport parse_report(std::string_view text);

/// `# fpr<TAB>tpr` header, then one point per line.
void write_roc_table(std::ostream& out, const RocCurve& curve);

}  // namespace fas
