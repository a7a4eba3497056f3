#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vidloc/text.hpp"

namespace vidloc {

/// One sentence of the source transcript, anchored at the moment it is
/// spoken. Text is a single trimmed line.
struct TranscriptSegment {
  std::size_t index = 0;
  Millis start{0};
  std::string text;

  bool operator==(const TranscriptSegment&) const = default;
};

/// A validated, timestamped transcript for one video.
///
/// Invariants (enforced by validate_transcript and every parser):
///   - at least one segment
///   - segment indexes are 0..n-1 in order
///   - start times strictly increase and stay below `duration`
///   - every text is non-empty, trimmed, and free of line breaks
struct Transcript {
  std::string video_id;
  std::string language;
  Millis duration{0};
  std::vector<TranscriptSegment> segments;

  bool operator==(const Transcript&) const = default;
};

enum class TranscriptFormat { CanonicalJson, TimedLines };

std::optional<TranscriptFormat> transcript_format_from_string(std::string_view name);
std::string_view to_string(TranscriptFormat format);

// Out-of-band metadata for the timed-lines format. Values given here win
// over `# key: value` directives embedded in the file.
struct TimedLinesOptions {
  std::optional<std::string> video_id;
  std::optional<std::string> language;
  std::optional<Millis> duration;
};

/// Parses raw bytes into a Transcript. Throws Error with one of
/// EmptyTranscript, NonMonotonicTimestamps, MalformedEntry, DurationMissing;
/// never anything else, whatever the input.
Transcript parse_transcript(std::string_view raw, TranscriptFormat format,
                            const TimedLinesOptions& options = {});

std::string serialize_transcript(const Transcript& transcript, TranscriptFormat format);

// Throws the same errors as parse_transcript when an invariant fails.
void validate_transcript(const Transcript& transcript);

}  // namespace vidloc
