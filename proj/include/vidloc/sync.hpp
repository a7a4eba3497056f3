#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vidloc/alignment.hpp"
#include "vidloc/providers.hpp"

namespace vidloc {

// One sentence of the output timeline. The original frames
// [source_start, source_end) play, then the frame at source_end is held for
// `freeze`; on the audio track the sentence's clip plays, then `pause` of
// silence. At most one of freeze/pause is non-zero and both tracks advance
// by max(slot, audio).
struct SyncEntry {
  std::size_t sentence_index = 0;
  Millis source_start{0};
  Millis source_end{0};
  AudioAsset audio;
  Millis freeze{0};
  Millis pause{0};

  Millis slot() const { return source_end - source_start; }
  Millis output_duration() const { return slot() + freeze; }

  bool operator==(const SyncEntry&) const = default;
};

/// The freeze/pause timeline for a whole video. Frames before the first
/// sentence (`pre_roll`) play at original speed over silence.
struct SyncPlan {
  std::string video_id;
  Millis pre_roll{0};
  Millis video_duration{0};
  std::vector<SyncEntry> entries;
  Millis total_duration{0};

  bool operator==(const SyncPlan&) const = default;
};

struct StreamDurations {
  Millis video_stream{0};
  Millis audio_stream{0};
};

/// Builds the plan. Throws InputMismatch when the lists disagree in length
/// or sentence index (or audio has no duration) and SlotCoverage when the
/// slots do not tile [first start, video_duration).
SyncPlan plan_timeline(std::string_view video_id, const std::vector<AlignedSentence>& aligned,
                       const std::vector<AudioAsset>& audio, Millis video_duration);

StreamDurations stream_durations(const SyncPlan& plan);

// Output-timeline offset at which entry i (and its audio) begins.
Millis entry_offset(const SyncPlan& plan, std::size_t i);

// Re-checks every plan invariant; throws SlotCoverage or InputMismatch.
void validate_plan(const SyncPlan& plan);

std::string serialize_plan(const SyncPlan& plan);
SyncPlan parse_plan(std::string_view json_text);

}  // namespace vidloc
