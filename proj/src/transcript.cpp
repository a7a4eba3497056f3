#include "vidloc/transcript.hpp"

#include <json.hpp>

#include "vidloc/error.hpp"

namespace vidloc {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kDirectiveVideoId = "video_id";
constexpr std::string_view kDirectiveLanguage = "language";
constexpr std::string_view kDirectiveDuration = "duration";

bool has_line_break(std::string_view s) {
  return s.find_first_of("\r\n") != std::string_view::npos;
}

bool has_control(std::string_view s) {
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7F) return true;
  }
  return false;
}

void check_segment_text(std::size_t record, std::string_view text) {
  if (!text::is_valid_utf8(text)) throw MalformedEntry(record, "text is not valid UTF-8");
  if (text::trim(text).empty()) throw MalformedEntry(record, "empty text");
  if (text::trim(text).size() != text.size()) {
    throw MalformedEntry(record, "text has surrounding whitespace");
  }
  if (has_line_break(text)) throw MalformedEntry(record, "text contains a line break");
}

Transcript parse_canonical_json(std::string_view raw) {
  raw = text::strip_bom(raw);
  if (text::trim(raw).empty()) throw Error(ErrorCode::EmptyTranscript, "empty input");
  const json doc = json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw MalformedEntry(std::nullopt, "not valid JSON");
  if (!doc.is_object()) throw MalformedEntry(std::nullopt, "top level must be an object");

  Transcript t;
  auto read_string = [&](const char* key) -> std::string {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw MalformedEntry(std::nullopt, std::string(key) + " must be a string");
    }
    return it->get<std::string>();
  };
  t.video_id = read_string("video_id");
  t.language = read_string("language");

  const auto dur = doc.find("video_duration");
  if (dur == doc.end() || dur->is_null()) {
    throw Error(ErrorCode::DurationMissing, "video_duration is missing");
  }
  if (!dur->is_number()) throw MalformedEntry(std::nullopt, "video_duration must be a number");
  const auto duration = text::seconds_to_millis(dur->get<double>());
  if (!duration || duration->count() <= 0) {
    throw MalformedEntry(std::nullopt, "video_duration must be a positive number of seconds");
  }
  t.duration = *duration;

  const auto segs = doc.find("segments");
  if (segs == doc.end() || segs->is_null()) {
    throw Error(ErrorCode::EmptyTranscript, "transcript has no segments");
  }
  if (!segs->is_array()) throw MalformedEntry(std::nullopt, "segments must be an array");

  std::size_t record = 0;
  for (const auto& seg : *segs) {
    if (!seg.is_object()) throw MalformedEntry(record, "segment must be an object");
    const auto start = seg.find("start");
    if (start == seg.end() || !start->is_number()) {
      throw MalformedEntry(record, "start must be a number");
    }
    const auto ms = text::seconds_to_millis(start->get<double>());
    if (!ms) throw MalformedEntry(record, "start must be a non-negative number of seconds");
    const auto txt = seg.find("text");
    if (txt == seg.end() || !txt->is_string()) {
      throw MalformedEntry(record, "text must be a string");
    }
    if (const auto idx = seg.find("index"); idx != seg.end()) {
      if (!idx->is_number_unsigned() || idx->get<std::size_t>() != record) {
        throw MalformedEntry(record, "index must equal the segment position");
      }
    }
    const std::string raw_text = txt->get<std::string>();
    const std::string_view trimmed = text::trim(raw_text);
    check_segment_text(record, trimmed);
    t.segments.push_back({record, *ms, std::string(trimmed)});
    ++record;
  }
  return t;
}

Transcript parse_timed_lines(std::string_view raw, const TimedLinesOptions& options) {
  if (!text::is_valid_utf8(raw)) {
    // Name the first record whose line carries the bad bytes.
    std::size_t record = 0;
    for (const auto& line : text::split_lines(raw)) {
      const auto body = text::trim(line);
      if (!text::is_valid_utf8(line)) {
        throw MalformedEntry(body.starts_with('#') ? std::nullopt : std::optional(record),
                             "line is not valid UTF-8");
      }
      if (!body.empty() && !body.starts_with('#')) ++record;
    }
    throw MalformedEntry(std::nullopt, "input is not valid UTF-8");
  }

  Transcript t;
  std::optional<Millis> embedded_duration;
  std::optional<std::string> embedded_id;
  std::optional<std::string> embedded_language;

  std::size_t record = 0;
  for (const auto& line : text::split_lines(text::strip_bom(raw))) {
    const std::string_view body = text::trim(line);
    if (body.empty()) continue;
    if (body.starts_with('#')) {
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      const auto key = text::trim(body.substr(1, colon - 1));
      const auto value = text::trim(body.substr(colon + 1));
      if (key == kDirectiveDuration) {
        embedded_duration = text::parse_seconds(value);
        if (!embedded_duration || embedded_duration->count() <= 0) {
          throw MalformedEntry(std::nullopt, "duration directive must be positive seconds");
        }
      } else if (key == kDirectiveVideoId) {
        embedded_id = std::string(value);
      } else if (key == kDirectiveLanguage) {
        embedded_language = std::string(value);
      }
      continue;
    }
    const auto bar = body.find('|');
    if (bar == std::string_view::npos) throw MalformedEntry(record, "expected <seconds>|<text>");
    const auto start = text::parse_seconds(body.substr(0, bar));
    if (!start) throw MalformedEntry(record, "start is not a non-negative decimal");
    const auto txt = text::trim(body.substr(bar + 1));
    check_segment_text(record, txt);
    t.segments.push_back({record, *start, std::string(txt)});
    ++record;
  }

  t.video_id = options.video_id.value_or(embedded_id.value_or(""));
  t.language = options.language.value_or(embedded_language.value_or("und"));
  const auto duration = options.duration ? options.duration : embedded_duration;
  if (t.segments.empty()) throw Error(ErrorCode::EmptyTranscript, "transcript has no segments");
  if (!duration) throw Error(ErrorCode::DurationMissing, "no video duration supplied");
  if (duration->count() <= 0) throw MalformedEntry(std::nullopt, "duration must be positive");
  t.duration = *duration;
  return t;
}

}  // namespace

std::optional<TranscriptFormat> transcript_format_from_string(std::string_view name) {
  if (name == "canonical-json" || name == "json") return TranscriptFormat::CanonicalJson;
  if (name == "timed-lines" || name == "lines") return TranscriptFormat::TimedLines;
  return std::nullopt;
}

std::string_view to_string(TranscriptFormat format) {
  return format == TranscriptFormat::CanonicalJson ? "canonical-json" : "timed-lines";
}

void validate_transcript(const Transcript& t) {
  for (const auto* field : {&t.video_id, &t.language}) {
    if (has_control(*field) || !text::is_valid_utf8(*field) || text::trim(*field) != *field) {
      throw MalformedEntry(std::nullopt, "video_id/language must be trimmed printable UTF-8");
    }
  }
  if (t.segments.empty()) throw Error(ErrorCode::EmptyTranscript, "transcript has no segments");
  if (t.duration.count() <= 0) throw Error(ErrorCode::DurationMissing, "duration must be positive");
  if (t.duration > kMaxTimestamp) throw MalformedEntry(std::nullopt, "duration out of range");
  for (std::size_t i = 0; i < t.segments.size(); ++i) {
    const auto& seg = t.segments[i];
    if (seg.index != i) throw MalformedEntry(i, "segment index out of sequence");
    if (seg.start.count() < 0) throw MalformedEntry(i, "negative start time");
    check_segment_text(i, seg.text);
    if (i > 0 && seg.start <= t.segments[i - 1].start) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  "segment " + std::to_string(i) + " starts at " + text::format_seconds(seg.start) +
                      "s, not after segment " + std::to_string(i - 1));
    }
  }
  // Checked after ordering so a shuffled file reports NonMonotonicTimestamps.
  for (const auto& seg : t.segments) {
    if (seg.start >= t.duration) {
      throw MalformedEntry(seg.index, "start time is not before the video duration");
    }
  }
}

Transcript parse_transcript(std::string_view raw, TranscriptFormat format,
                            const TimedLinesOptions& options) {
  Transcript t = format == TranscriptFormat::CanonicalJson ? parse_canonical_json(raw)
                                                           : parse_timed_lines(raw, options);
  validate_transcript(t);
  return t;
}

std::string serialize_transcript(const Transcript& t, TranscriptFormat format) {
  if (format == TranscriptFormat::CanonicalJson) {
    ordered_json doc;
    doc["video_id"] = t.video_id;
    doc["language"] = t.language;
    doc["video_duration"] = text::to_seconds(t.duration);
    auto& segs = doc["segments"] = ordered_json::array();
    for (const auto& seg : t.segments) {
      segs.push_back({{"start", text::to_seconds(seg.start)}, {"text", seg.text}});
    }
    return doc.dump(2) + "\n";
  }

  std::string out;
  if (!t.video_id.empty()) out += "# video_id: " + t.video_id + "\n";
  out += "# language: " + t.language + "\n";
  out += "# duration: " + text::format_seconds(t.duration) + "\n";
  for (const auto& seg : t.segments) {
    out += text::format_seconds(seg.start);
    out += '|';
    out += seg.text;
    out += '\n';
  }
  return out;
}

}  // namespace vidloc
