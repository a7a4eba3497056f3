#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidloc/alignment.hpp"
#include "vidloc/providers.hpp"

namespace vidloc {

struct ConfidenceScore {
  std::size_t sentence_index = 0;
  double f1_score = 0.0;                // [0, 1]
  std::optional<double> cosine_score;   // [-1, 1]
  std::string back_translated_text;

  bool operator==(const ConfidenceScore&) const = default;
};

enum class Subject { Reading, Math, Other };
enum class Combination { F1Only, CosineOnly };
enum class Classification { Confident, Flagged };

std::string_view to_string(Subject subject);
std::optional<Subject> subject_from_string(std::string_view name);
std::string_view to_string(Combination combination);
std::optional<Combination> combination_from_string(std::string_view name);
std::string_view to_string(Classification classification);

struct ThresholdPolicy {
  Subject subject = Subject::Reading;
  std::optional<double> f1_threshold;
  std::optional<double> cosine_threshold;
  Combination combination = Combination::F1Only;

  /// Shipped defaults, fit at a 2% false-positive share of all sentences:
  ///   reading: f1 0.955, cosine 0.890
  ///   math:    f1 0.959, cosine 0.931
  /// Other subjects fall back to the reading values.
  static ThresholdPolicy defaults(Subject subject);

  // Throws InvalidConfig when the threshold needed by `combination` is absent
  // or a threshold is out of range.
  void validate() const;

  bool operator==(const ThresholdPolicy&) const = default;
};

nlohmann::json to_json(const ThresholdPolicy& policy);
ThresholdPolicy threshold_policy_from_json(const nlohmann::json& j, Subject subject);

/// Providers for one round trip. `back` translates target -> source; it is
/// usually the same handle as `forward`. `cosine` is optional.
struct RoundTripProviders {
  std::shared_ptr<Translator> back;
  std::shared_ptr<SimilarityScorer> f1;
  std::shared_ptr<SimilarityScorer> cosine;
};

/// Back-translates the sentence's translation (never its original) and
/// scores the back-translation against the original. Provider errors
/// propagate.
ConfidenceScore round_trip_score(const AlignedSentence& sentence, std::string_view source,
                                 std::string_view target, const RoundTripProviders& providers);

// Score at or above the threshold is Confident. Throws Error(MissingScore)
// when the policy compares cosine and the score has none.
Classification classify(const ConfidenceScore& score, const ThresholdPolicy& policy);

// ---------------------------------------------------------------------------
// Calibration against labeled data. All percentages use the count of ALL
// items as the denominator.

struct LabeledPair {
  double score = 0.0;
  bool is_match = false;
  std::optional<std::string> original;
  std::optional<std::string> back_translated;
};

std::vector<LabeledPair> parse_labeled_corpus(std::string_view json_text);
std::string serialize_labeled_corpus(const std::vector<LabeledPair>& pairs);

struct ConfusionReport {
  double tp_pct = 0.0;
  double fp_pct = 0.0;
  double fn_pct = 0.0;
  double tn_pct = 0.0;
};

// Throws Error(LengthMismatch) when sizes differ, PreconditionViolation when
// empty.
ConfusionReport confusion_report(const std::vector<bool>& predictions,
                                 const std::vector<bool>& truth);

// 100 * count / total, the single percentage formula shared by every report.
double percent_of(std::size_t count, std::size_t total);

// False discovery rate, 100 * fp / (fp + tp); 0 when both are 0.
double fdr(double tp_pct, double fp_pct);

struct CalibrationResult {
  double target_fp_pct = 0.0;
  double threshold = 0.0;
  double tp_pct = 0.0;
  double fp_pct = 0.0;
  double fn_pct = 0.0;
  double fdr_pct = 0.0;
};

/// Smallest threshold, among the observed scores plus one value just above
/// the maximum, whose false-positive share does not exceed the target.
CalibrationResult calibrate(const std::vector<LabeledPair>& labeled, double target_fp_pct);

struct F1Optimum {
  double threshold = 0.0;
  double classifier_f1 = 0.0;
};

/// Observed score maximizing 2TP / (2TP + FP + FN); ties go to the higher
/// threshold. Requires at least one true match.
F1Optimum f1_optimal_threshold(const std::vector<LabeledPair>& labeled);

nlohmann::json to_json(const CalibrationResult& result);

// Column-aligned table: target, threshold, TP%, FP%, FN%, FDR%.
std::string format_calibration_table(const std::vector<CalibrationResult>& rows);

}  // namespace vidloc
