#include "vidloc/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "vidloc/error.hpp"

namespace vidloc {

using json = nlohmann::json;

std::string_view to_string(Subject subject) {
  switch (subject) {
    case Subject::Reading: return "reading";
    case Subject::Math: return "math";
    case Subject::Other: return "other";
  }
  return "other";
}

std::optional<Subject> subject_from_string(std::string_view name) {
  if (name == "reading") return Subject::Reading;
  if (name == "math") return Subject::Math;
  if (name == "other") return Subject::Other;
  return std::nullopt;
}

std::string_view to_string(Combination combination) {
  return combination == Combination::F1Only ? "f1-only" : "cosine-only";
}

std::optional<Combination> combination_from_string(std::string_view name) {
  if (name == "f1-only") return Combination::F1Only;
  if (name == "cosine-only") return Combination::CosineOnly;
  return std::nullopt;
}

std::string_view to_string(Classification classification) {
  return classification == Classification::Confident ? "confident" : "flagged";
}

ThresholdPolicy ThresholdPolicy::defaults(Subject subject) {
  switch (subject) {
    case Subject::Math: return {Subject::Math, 0.959, 0.931, Combination::F1Only};
    case Subject::Reading: return {Subject::Reading, 0.955, 0.890, Combination::F1Only};
    case Subject::Other: return {Subject::Other, 0.955, 0.890, Combination::F1Only};
  }
  return {};
}

void ThresholdPolicy::validate() const {
  if (!f1_threshold && !cosine_threshold) {
    throw Error(ErrorCode::InvalidConfig, "policy has no threshold");
  }
  if (f1_threshold && !(*f1_threshold >= 0.0 && *f1_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "f1 threshold outside [0,1]");
  }
  if (cosine_threshold && !(*cosine_threshold >= -1.0 && *cosine_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "cosine threshold outside [-1,1]");
  }
  if (combination == Combination::F1Only && !f1_threshold) {
    throw Error(ErrorCode::InvalidConfig, "f1-only policy lacks an f1 threshold");
  }
  if (combination == Combination::CosineOnly && !cosine_threshold) {
    throw Error(ErrorCode::InvalidConfig, "cosine-only policy lacks a cosine threshold");
  }
}

json to_json(const ThresholdPolicy& p) {
  json j{{"subject", to_string(p.subject)}, {"combination", to_string(p.combination)}};
  j["f1"] = p.f1_threshold ? json(*p.f1_threshold) : json(nullptr);
  j["cosine"] = p.cosine_threshold ? json(*p.cosine_threshold) : json(nullptr);
  return j;
}

ThresholdPolicy threshold_policy_from_json(const json& j, Subject subject) {
  ThresholdPolicy p = ThresholdPolicy::defaults(subject);
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "policy must be an object");
  try {
    if (j.contains("f1")) {
      p.f1_threshold = j["f1"].is_null() ? std::nullopt : std::optional(j["f1"].get<double>());
    }
    if (j.contains("cosine")) {
      p.cosine_threshold =
          j["cosine"].is_null() ? std::nullopt : std::optional(j["cosine"].get<double>());
    }
    if (j.contains("combination")) {
      const auto c = combination_from_string(j["combination"].get<std::string>());
      if (!c) throw Error(ErrorCode::InvalidConfig, "unknown combination");
      p.combination = *c;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("policy: ") + e.what());
  }
  p.validate();
  return p;
}

ConfidenceScore round_trip_score(const AlignedSentence& sentence, std::string_view source,
                                 std::string_view target, const RoundTripProviders& providers) {
  if (text::trim(sentence.translated_text).empty()) {
    throw Error(ErrorCode::PreconditionViolation,
                "round_trip_score: sentence " + std::to_string(sentence.index) +
                    " has an empty translation");
  }
  if (!providers.back || !providers.f1) {
    throw Error(ErrorCode::InvalidConfig, "round_trip_score: missing back-translation or f1 provider");
  }
  ConfidenceScore score;
  score.sentence_index = sentence.index;
  score.back_translated_text = providers.back->translate(sentence.translated_text, target, source);
  score.f1_score = providers.f1->similarity(sentence.original_text, score.back_translated_text,
                                            SimilarityMetric::F1);
  if (providers.cosine) {
    score.cosine_score = providers.cosine->similarity(
        sentence.original_text, score.back_translated_text, SimilarityMetric::Cosine);
  }
  return score;
}

Classification classify(const ConfidenceScore& score, const ThresholdPolicy& policy) {
  policy.validate();
  if (policy.combination == Combination::F1Only) {
    return score.f1_score >= *policy.f1_threshold ? Classification::Confident
                                                  : Classification::Flagged;
  }
  if (!score.cosine_score) {
    throw Error(ErrorCode::MissingScore, "sentence " + std::to_string(score.sentence_index) +
                                             " has no cosine score");
  }
  return *score.cosine_score >= *policy.cosine_threshold ? Classification::Confident
                                                         : Classification::Flagged;
}

// ---------------------------------------------------------------------------

std::vector<LabeledPair> parse_labeled_corpus(std::string_view json_text) {
  const json doc = json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorCode::PreconditionViolation, "labeled corpus must be a JSON array");
  }
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    if (!item.is_object() || !item.contains("score") || !item["score"].is_number() ||
        !item.contains("is_match") || !item["is_match"].is_boolean()) {
      throw Error(ErrorCode::PreconditionViolation,
                  "labeled corpus item " + std::to_string(i) + " needs numeric score and boolean is_match");
    }
    LabeledPair p;
    p.score = item["score"].get<double>();
    if (!std::isfinite(p.score)) {
      throw Error(ErrorCode::PreconditionViolation, "labeled corpus item " + std::to_string(i) +
                                                        " has a non-finite score");
    }
    p.is_match = item["is_match"].get<bool>();
    if (item.contains("original") && item["original"].is_string()) {
      p.original = item["original"].get<std::string>();
    }
    if (item.contains("back_translated") && item["back_translated"].is_string()) {
      p.back_translated = item["back_translated"].get<std::string>();
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string serialize_labeled_corpus(const std::vector<LabeledPair>& pairs) {
  json doc = json::array();
  for (const auto& p : pairs) {
    json item{{"score", p.score}, {"is_match", p.is_match}};
    if (p.original) item["original"] = *p.original;
    if (p.back_translated) item["back_translated"] = *p.back_translated;
    doc.push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

double percent_of(std::size_t count, std::size_t total) {
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

ConfusionReport confusion_report(const std::vector<bool>& predictions,
                                 const std::vector<bool>& truth) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "confusion_report: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(truth.size()) + " labels");
  }
  if (predictions.empty()) throw Error(ErrorCode::PreconditionViolation, "confusion_report: empty");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && truth[i]) ++tp;
    else if (predictions[i]) ++fp;
    else if (truth[i]) ++fn;
    else ++tn;
  }
  const auto n = predictions.size();
  return {percent_of(tp, n), percent_of(fp, n), percent_of(fn, n), percent_of(tn, n)};
}

double fdr(double tp_pct, double fp_pct) {
  if (tp_pct < 0.0 || fp_pct < 0.0) {
    throw Error(ErrorCode::PreconditionViolation, "fdr: negative percentage");
  }
  if (tp_pct + fp_pct == 0.0) return 0.0;
  return 100.0 * fp_pct / (fp_pct + tp_pct);
}

namespace {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

void require_labeled(const std::vector<LabeledPair>& labeled, const char* op) {
  if (labeled.empty()) throw Error(ErrorCode::PreconditionViolation, std::string(op) + ": empty");
  for (const auto& p : labeled) {
    if (!std::isfinite(p.score)) {
      throw Error(ErrorCode::PreconditionViolation, std::string(op) + ": non-finite score");
    }
  }
}

// Walks distinct scores from high to low. Lowering the threshold to the next
// distinct score moves every pair with that score to "predicted positive".
template <typename Visit>
void sweep_descending(const std::vector<LabeledPair>& labeled, Visit&& visit) {
  std::vector<LabeledPair> sorted = labeled;
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledPair& a, const LabeledPair& b) { return a.score > b.score; });
  Counts c;
  for (const auto& p : sorted) c.fn += p.is_match ? 1 : 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == t) {
      if (sorted[i].is_match) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
      }
      ++i;
    }
    if (!visit(t, c)) return;
  }
}

}  // namespace

CalibrationResult calibrate(const std::vector<LabeledPair>& labeled, double target_fp_pct) {
  require_labeled(labeled, "calibrate");
  if (!(target_fp_pct >= 0.0 && target_fp_pct <= 100.0)) {
    throw Error(ErrorCode::PreconditionViolation, "calibrate: target must be within [0, 100]");
  }
  const auto n = labeled.size();
  double max_score = -std::numeric_limits<double>::infinity();
  std::size_t positives = 0;
  for (const auto& p : labeled) {
    max_score = std::max(max_score, p.score);
    positives += p.is_match ? 1 : 0;
  }

  // Above every score nothing is predicted positive: always feasible.
  double best_threshold = std::nextafter(max_score, std::numeric_limits<double>::infinity());
  Counts best{0, 0, positives};
  sweep_descending(labeled, [&](double t, const Counts& c) {
    // fp only grows as the threshold falls, so the first infeasible
    // threshold ends the search.
    if (percent_of(c.fp, n) > target_fp_pct) return false;
    best_threshold = t;
    best = c;
    return true;
  });

  CalibrationResult r;
  r.target_fp_pct = target_fp_pct;
  r.threshold = best_threshold;
  r.tp_pct = percent_of(best.tp, n);
  r.fp_pct = percent_of(best.fp, n);
  r.fn_pct = percent_of(best.fn, n);
  r.fdr_pct = fdr(r.tp_pct, r.fp_pct);
  return r;
}

F1Optimum f1_optimal_threshold(const std::vector<LabeledPair>& labeled) {
  require_labeled(labeled, "f1_optimal_threshold");
  if (std::none_of(labeled.begin(), labeled.end(), [](const auto& p) { return p.is_match; })) {
    throw Error(ErrorCode::PreconditionViolation, "f1_optimal_threshold: no true match");
  }
  F1Optimum best{0.0, -1.0};
  sweep_descending(labeled, [&](double t, const Counts& c) {
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    const double f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
    // Strict improvement only: the first (highest) threshold wins ties.
    if (f1 > best.classifier_f1) best = {t, f1};
    return true;
  });
  return best;
}

json to_json(const CalibrationResult& r) {
  return json{{"target_fp_pct", r.target_fp_pct}, {"threshold", r.threshold},
              {"tp_pct", r.tp_pct},               {"fp_pct", r.fp_pct},
              {"fn_pct", r.fn_pct},               {"fdr_pct", r.fdr_pct}};
}

std::string format_calibration_table(const std::vector<CalibrationResult>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-10s %8s %8s %8s %8s\n", "target", "threshold",
                "TP%", "FP%", "FN%", "FDR%");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10.2f %-10.4f %8.2f %8.2f %8.2f %8.2f\n",
                  r.target_fp_pct, r.threshold, r.tp_pct, r.fp_pct, r.fn_pct, r.fdr_pct);
    out += line;
  }
  return out;
}

}  // namespace vidloc
