#include <doctest.h>

#include <algorithm>

#include "support.hpp"

using namespace vidloc;
using namespace vidloc::testing;

namespace {

ErrorCode code_of(std::string_view raw, TranscriptFormat f, const TimedLinesOptions& o = {}) {
  try {
    parse_transcript(raw, f, o);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << raw);
  return ErrorCode::IoError;
}

std::optional<std::size_t> malformed_record(std::string_view raw, TranscriptFormat f,
                                            const TimedLinesOptions& o = {}) {
  try {
    parse_transcript(raw, f, o);
  } catch (const MalformedEntry& e) {
    return e.record();
  }
  FAIL("expected MalformedEntry for: " << raw);
  return std::nullopt;
}

const TimedLinesOptions kTen{std::nullopt, std::nullopt, Millis{10000}};

}  // namespace

TEST_SUITE("transcript") {
  TEST_CASE("timed lines with an out-of-band duration") {
    const auto t =
        parse_transcript("0.0|Hello there.\n3.2|We add two.\n", TranscriptFormat::TimedLines, kTen);
    REQUIRE(t.segments.size() == 2);
    CHECK(t.segments[0].start == Millis{0});
    CHECK(t.segments[1].start == Millis{3200});
    CHECK(t.segments[0].text == "Hello there.");
    CHECK(t.segments[1].index == 1);
    CHECK(t.duration == Millis{10000});
    CHECK(t.language == "und");
  }

  TEST_CASE("timed lines directives, comments and blank lines") {
    const auto raw =
        "\xEF\xBB\xBF# video_id: abc\r\n# language: en\r\n# duration: 12.5\r\n"
        "# a comment\r\n\r\n1|First.\r\n2.5|Second | with a bar.\r\n";
    const auto t = parse_transcript(raw, TranscriptFormat::TimedLines);
    CHECK(t.video_id == "abc");
    CHECK(t.language == "en");
    CHECK(t.duration == Millis{12500});
    REQUIRE(t.segments.size() == 2);
    CHECK(t.segments[1].text == "Second | with a bar.");

    const TimedLinesOptions o{"xyz", "fr", Millis{20000}};
    const auto overridden = parse_transcript(raw, TranscriptFormat::TimedLines, o);
    CHECK(overridden.video_id == "xyz");
    CHECK(overridden.language == "fr");
    CHECK(overridden.duration == Millis{20000});
  }

  TEST_CASE("canonical json") {
    const auto raw = R"({"video_id":"v1","language":"zh","video_duration":9.5,
      "segments":[{"start":0.5,"text":"你好。"},{"start":4,"text":"再见。","index":1}]})";
    const auto t = parse_transcript(raw, TranscriptFormat::CanonicalJson);
    CHECK(t.video_id == "v1");
    CHECK(t.language == "zh");
    CHECK(t.duration == Millis{9500});
    REQUIRE(t.segments.size() == 2);
    CHECK(t.segments[0].start == Millis{500});
    CHECK(t.segments[1].text == "再见。");
  }

  TEST_CASE("enumerated errors") {
    using F = TranscriptFormat;
    CHECK(code_of("", F::TimedLines, kTen) == ErrorCode::EmptyTranscript);
    CHECK(code_of("  \n# only comments\n", F::TimedLines, kTen) == ErrorCode::EmptyTranscript);
    CHECK(code_of("", F::CanonicalJson) == ErrorCode::EmptyTranscript);
    CHECK(code_of(R"({"video_id":"v","language":"en","video_duration":5,"segments":[]})",
                  F::CanonicalJson) == ErrorCode::EmptyTranscript);
    CHECK(code_of("3.2|a\n1.0|b\n", F::TimedLines, kTen) == ErrorCode::NonMonotonicTimestamps);
    CHECK(code_of("1|a\n1|b\n", F::TimedLines, kTen) == ErrorCode::NonMonotonicTimestamps);
    CHECK(code_of("0|a\n", F::TimedLines) == ErrorCode::DurationMissing);
    CHECK(code_of(R"({"video_id":"v","language":"en","segments":[{"start":0,"text":"a"}]})",
                  F::CanonicalJson) == ErrorCode::DurationMissing);
    CHECK(code_of("{not json", F::CanonicalJson) == ErrorCode::MalformedEntry);
    CHECK(code_of("0|a\n12|b\n", F::TimedLines, kTen) == ErrorCode::MalformedEntry);
    CHECK(code_of("0|\xff\n", F::TimedLines, kTen) == ErrorCode::MalformedEntry);
  }

  TEST_CASE("malformed entries name the record") {
    using F = TranscriptFormat;
    CHECK(malformed_record("0|a\nnope\n", F::TimedLines, kTen) == std::optional<std::size_t>(1));
    CHECK(malformed_record("0|a\n-1|b\n", F::TimedLines, kTen) == std::optional<std::size_t>(1));
    CHECK(malformed_record("0|a\n1|   \n", F::TimedLines, kTen) == std::optional<std::size_t>(1));
    CHECK(malformed_record("# c\n0|a\n1|b\n2|\xc3\n", F::TimedLines, kTen) ==
          std::optional<std::size_t>(2));
    CHECK(malformed_record(R"({"video_id":"v","language":"en","video_duration":5,
      "segments":[{"start":0,"text":"a"},{"start":"x","text":"b"}]})",
                           F::CanonicalJson) == std::optional<std::size_t>(1));
    CHECK(malformed_record(R"({"video_id":"v","language":"en","video_duration":5,
      "segments":[{"start":0,"text":"a","index":3}]})",
                           F::CanonicalJson) == std::optional<std::size_t>(0));
    CHECK(malformed_record("[1,2]", F::CanonicalJson) == std::nullopt);
  }

  TEST_CASE("format names") {
    CHECK(transcript_format_from_string("canonical-json") == TranscriptFormat::CanonicalJson);
    CHECK(transcript_format_from_string("timed-lines") == TranscriptFormat::TimedLines);
    CHECK_FALSE(transcript_format_from_string("srt"));
    CHECK(to_string(TranscriptFormat::TimedLines) == "timed-lines");
  }

  TEST_CASE("chinese text survives a round trip byte for byte") {
    Transcript t{"zh1", "zh", Millis{8000}, {{0, Millis{0}, "你好。"}, {1, Millis{2500}, "我们把七放在个位。"}}};
    for (const auto f : {TranscriptFormat::CanonicalJson, TranscriptFormat::TimedLines}) {
      CHECK(parse_transcript(serialize_transcript(t, f), f) == t);
    }
  }

  TEST_CASE("round trip property, both formats") {
    Rng rng(20240501);
    for (int i = 0; i < 1000; ++i) {
      const auto t = random_any_transcript(rng);
      for (const auto f : {TranscriptFormat::CanonicalJson, TranscriptFormat::TimedLines}) {
        const auto text = serialize_transcript(t, f);
        const auto back = parse_transcript(text, f);
        CHECK_MESSAGE(back == t, text);
        CHECK(serialize_transcript(back, f) == text);
      }
    }
  }

  TEST_CASE("any order-breaking permutation of lines is rejected") {
    Rng rng(99);
    for (int i = 0; i < 300; ++i) {
      auto t = random_transcript(rng, "p", 8);
      if (t.segments.size() < 2) continue;
      std::vector<std::string> lines;
      for (const auto& s : t.segments) lines.push_back(text::format_seconds(s.start) + "|" + s.text);
      std::shuffle(lines.begin(), lines.end(), rng);
      std::string raw;
      for (const auto& l : lines) raw += l + "\n";
      const TimedLinesOptions o{std::nullopt, std::nullopt, t.duration};
      bool sorted = true;
      for (std::size_t k = 1; k < lines.size(); ++k) {
        sorted = sorted && *text::parse_seconds(lines[k - 1].substr(0, lines[k - 1].find('|'))) <
                               *text::parse_seconds(lines[k].substr(0, lines[k].find('|')));
      }
      if (sorted) {
        CHECK_NOTHROW(parse_transcript(raw, TranscriptFormat::TimedLines, o));
      } else {
        CHECK(code_of(raw, TranscriptFormat::TimedLines, o) == ErrorCode::NonMonotonicTimestamps);
      }
    }
  }

  TEST_CASE("validate_transcript rejects broken values") {
    Transcript t{"v", "en", Millis{5000}, {{0, Millis{0}, "a"}, {1, Millis{1000}, "b"}}};
    CHECK_NOTHROW(validate_transcript(t));
    auto gap = t;
    gap.segments[1].index = 2;
    CHECK_THROWS_AS(validate_transcript(gap), MalformedEntry);
    auto late = t;
    late.segments[1].start = Millis{5000};
    CHECK_THROWS_AS(validate_transcript(late), MalformedEntry);
    auto padded = t;
    padded.segments[0].text = " a";
    CHECK_THROWS_AS(validate_transcript(padded), MalformedEntry);
    auto multiline = t;
    multiline.segments[0].text = "a\nb";
    CHECK_THROWS_AS(validate_transcript(multiline), MalformedEntry);
  }

  TEST_CASE("fixture files parse") {
    for (const auto& entry : fs::directory_iterator(fixtures_dir() / "transcripts")) {
      const auto ext = entry.path().extension();
      const auto f = ext == ".json" ? TranscriptFormat::CanonicalJson : TranscriptFormat::TimedLines;
      CHECK_NOTHROW(parse_transcript(read_file(entry.path()), f));
    }
  }
}
