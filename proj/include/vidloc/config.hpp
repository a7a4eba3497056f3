#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "vidloc/assembly.hpp"
#include "vidloc/confidence.hpp"
#include "vidloc/providers.hpp"

namespace vidloc {

struct AssemblyConfig {
  bool enabled = true;
  ToolConfig tool;
};

/// Everything a pipeline run needs besides its inputs.
///
/// JSON layout:
///   { "source": "en", "target": "es", "subject": "reading",
///     "providers": { "translation": {...}, "back_translation": {...},
///                    "speech": {...}, "similarity": {...}, "cosine": {...} },
///     "policies": { "math": { "f1": 0.959 } },
///     "workers": 2, "sentence_workers": 4,
///     "retry": { "max_attempts": 5, "base_delay_ms": 1000 },
///     "abbreviations": "data/abbreviations/en.txt",
///     "assembly": { "enabled": true, "command": "...", "probe_command": "...",
///                   "container": "mp4", "tolerance_ms": 50, "timeout_s": 1800 } }
///
/// back_translation and cosine are optional; relative paths resolve against
/// the config file's directory.
struct PipelineConfig {
  std::string source_language = "en";
  std::string target_language;
  Subject subject = Subject::Reading;

  ProviderConfig translation;
  std::optional<ProviderConfig> back_translation;
  ProviderConfig speech;
  ProviderConfig similarity;
  std::optional<ProviderConfig> cosine;

  std::map<Subject, ThresholdPolicy> policies;

  std::size_t workers = 2;
  std::size_t sentence_workers = 4;
  int retry_attempts = 5;
  std::chrono::milliseconds retry_base_delay{1000};
  std::optional<std::filesystem::path> abbreviations;
  AssemblyConfig assembly;

  const ThresholdPolicy& policy() const { return policy_for(subject); }
  const ThresholdPolicy& policy_for(Subject s) const;
  RetryPolicy retry_policy() const;

  // Identity translation, mock speech, token-overlap scoring; rendering off.
  static PipelineConfig offline(std::string source, std::string target);

  // Throws InvalidConfig.
  void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace vidloc
