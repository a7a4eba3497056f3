#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vidloc/sync.hpp"

namespace vidloc {

// Video track ops.
struct PlaySegment {
  Millis start{0};
  Millis end{0};
  bool operator==(const PlaySegment&) const = default;
};
struct HoldFrame {
  Millis at{0};
  Millis duration{0};
  bool operator==(const HoldFrame&) const = default;
};
// Audio track ops.
struct AudioClip {
  std::size_t sentence_index = 0;
  std::filesystem::path path;
  Millis duration{0};
  bool operator==(const AudioClip&) const = default;
};
struct Silence {
  Millis duration{0};
  bool operator==(const Silence&) const = default;
};

using EdlOp = std::variant<PlaySegment, HoldFrame, AudioClip, Silence>;

std::string_view op_kind(const EdlOp& op);
Millis op_duration(const EdlOp& op);
bool is_video_op(const EdlOp& op);

struct EditDecisionList {
  std::string video_id;
  std::filesystem::path source_video;
  std::vector<EdlOp> ops;

  Millis video_track_duration() const;
  Millis audio_track_duration() const;

  bool operator==(const EditDecisionList&) const = default;
};

/// Transcribes a plan into ops: an optional pre-roll play-segment + silence,
/// then per entry play-segment, hold-frame (if frozen), audio-clip, silence
/// (if paused). Throws MissingAsset when an entry's audio is not among
/// `audio_assets`.
EditDecisionList emit_edl(const SyncPlan& plan, const std::filesystem::path& source_video,
                          const std::vector<AudioAsset>& audio_assets);

// Throws InputMismatch when track durations differ or a hold-frame does not
// directly follow the play-segment it extends.
void validate_edl(const EditDecisionList& edl);

std::string serialize_edl(const EditDecisionList& edl);
EditDecisionList parse_edl(std::string_view json_text);

/// How to drive the external media tool. Templates use {input}, {output}
/// and {script} placeholders, substituted shell-quoted.
struct ToolConfig {
  std::string command =
      "ffmpeg -hide_banner -loglevel error -y -i {input} -filter_complex_script {script} "
      "-map [vout] -map [aout] -c:v libx264 -preset veryfast -pix_fmt yuv420p -c:a aac "
      "-movflags +faststart {output}";
  std::string probe_command =
      "ffprobe -v error -show_entries format=duration -of default=noprint_wrappers=1:nokey=1 "
      "{output}";
  std::string container = "mp4";
  Millis tolerance{50};
  std::chrono::milliseconds timeout = std::chrono::minutes(30);
};

// The ffmpeg filter graph realizing the EDL; the source video is input 0.
std::string render_filter_script(const EditDecisionList& edl);

std::string expand_template(std::string_view tmpl, const std::filesystem::path& input,
                            const std::filesystem::path& output,
                            const std::filesystem::path& script);

/// Renders `edl` to `output`. Throws ToolFailure (missing source video,
/// non-zero exit, unreadable probe), MissingAsset (audio file absent) or
/// DurationDrift (rendered length off by more than the tolerance).
std::filesystem::path assemble(const EditDecisionList& edl, const ToolConfig& tool,
                               const std::filesystem::path& output);

}  // namespace vidloc
