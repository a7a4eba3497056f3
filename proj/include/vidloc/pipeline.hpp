#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidloc/alignment.hpp"
#include "vidloc/assembly.hpp"
#include "vidloc/config.hpp"
#include "vidloc/confidence.hpp"
#include "vidloc/sync.hpp"
#include "vidloc/transcript.hpp"

namespace vidloc {

enum class VideoStatus { Completed, ExcludedAlignment, FailedProvider, FailedAssembly, FailedInput };

std::string_view to_string(VideoStatus status);

struct SentenceResult {
  AlignedSentence sentence;
  std::optional<ConfidenceScore> score;  // empty when scoring failed
  Classification classification = Classification::Flagged;
  std::optional<std::string> error;
};

struct PipelineArtifacts {
  std::filesystem::path build_dir;
  std::optional<std::filesystem::path> plan;
  std::optional<std::filesystem::path> edl;
  std::optional<std::filesystem::path> video;
  std::filesystem::path failures_log;
};

struct PipelineResult {
  std::string video_id;
  VideoStatus status = VideoStatus::Completed;
  std::vector<SentenceResult> sentences;
  PipelineArtifacts artifacts;
  Subject subject = Subject::Reading;
  std::string diagnostic;
  std::optional<std::filesystem::path> source_video;
  Millis video_duration{0};
};

nlohmann::json to_json(const PipelineResult& result);

struct VideoJob {
  std::filesystem::path transcript;
  std::optional<std::filesystem::path> source_video;
  // Deduced from the extension when empty: .json is canonical JSON,
  // anything else timed lines.
  std::optional<TranscriptFormat> format;
  TimedLinesOptions timed_lines;
  // Per-job overrides of the config.
  std::optional<Subject> subject;
  std::optional<std::string> target_language;
};

/// One manifest entry's category fields.
struct CategoryLabel {
  std::string subject;
  std::string grade;
  std::string language;
  std::string model;

  std::string display() const;
  auto operator<=>(const CategoryLabel&) const = default;
};

struct ScoreStats {
  double mean = 0.0;
  double median = 0.0;  // lower median
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

ScoreStats score_stats(std::vector<double> values);

struct CategoryReport {
  CategoryLabel label;
  std::size_t videos_processed = 0;
  std::size_t videos_excluded = 0;
  std::size_t videos_failed = 0;
  std::size_t sentence_count = 0;
  ScoreStats f1;
  std::optional<ScoreStats> cosine;
  // Confident sentences over all sentences of completed videos.
  double correct_translation_percentage = 0.0;
};

CategoryReport aggregate(const CategoryLabel& label, const std::vector<PipelineResult>& results);

struct CategoryRun {
  std::vector<CategoryReport> reports;  // one per distinct label, sorted
  std::vector<PipelineResult> results;  // manifest order
};

nlohmann::json to_json(const CategoryReport& report);

// Table with one row per category: videos, excluded, sentences, mean/median/
// stddev of f1 and cosine, correct translation percentage.
std::string format_category_table(const std::vector<CategoryReport>& reports);

/// Provider handles used by a pipeline. Built from config by default;
/// tests inject their own.
struct PipelineProviders {
  std::shared_ptr<Translator> translator;
  std::shared_ptr<Translator> back_translator;
  std::shared_ptr<SpeechSynthesizer> speech;
  std::shared_ptr<SimilarityScorer> f1;
  std::shared_ptr<SimilarityScorer> cosine;

  static PipelineProviders from_config(const PipelineConfig& config);
};

struct RenderRequest {
  std::string video_id;
  std::string language;
  std::vector<AlignedSentence> sentences;
  Millis video_duration{0};
  std::optional<std::filesystem::path> source_video;
  std::filesystem::path work_dir;       // receives plan.json, edl.json
  std::filesystem::path audio_dir;      // defaults to work_dir/audio
  std::filesystem::path video_output;   // rendered file when assembly runs
};

struct RenderOutput {
  std::vector<AudioAsset> audio;
  SyncPlan plan;
  EditDecisionList edl;
  std::optional<std::filesystem::path> video;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::filesystem::path build_root);
  Pipeline(PipelineConfig config, std::filesystem::path build_root, PipelineProviders providers);

  /// parse, merge, translate, split, align, score and classify, synthesize,
  /// plan, emit EDL, render. Writes build/<video_id>/{transcript.json,
  /// translated.json, scores.json, audio/, plan.json, edl.json, out.<ext>,
  /// failures.log}. Stages whose inputs are unchanged since the last run are
  /// skipped. Failures come back as a status, never as an exception.
  PipelineResult run_video(const VideoJob& job) const;

  /// Runs every manifest entry on a bounded worker pool and aggregates per
  /// category label. Manifest: a JSON list (or {"videos": [...]}) of
  /// {transcript, source_video?, format?, subject, grade, language, model};
  /// paths are relative to the manifest.
  CategoryRun run_category(const std::filesystem::path& manifest) const;

  /// synthesize, plan_timeline, emit_edl and (when enabled and a source
  /// video exists) assemble. Errors propagate.
  RenderOutput render(const RenderRequest& request) const;

  const PipelineConfig& config() const { return config_; }
  const PipelineProviders& providers() const { return providers_; }
  const std::filesystem::path& build_root() const { return build_root_; }

 private:
  PipelineConfig config_;
  std::filesystem::path build_root_;
  PipelineProviders providers_;
  std::shared_ptr<const SentenceSplitter> splitter_;
};

}  // namespace vidloc
