#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vidloc/text.hpp"
#include "vidloc/transcript.hpp"

namespace vidloc {

/// A source sentence paired with its translation and the slice of the
/// original video it owns. Slots are half-open: [slot_start, slot_end).
struct AlignedSentence {
  std::size_t index = 0;
  std::string original_text;
  std::string translated_text;
  std::optional<std::string> back_translated_text;
  Millis slot_start{0};
  Millis slot_end{0};

  Millis slot() const { return slot_end - slot_start; }

  bool operator==(const AlignedSentence&) const = default;
};

// Segment texts joined with single spaces.
std::string merge_segments(const Transcript& transcript);

// Case-insensitive (ASCII) set of tokens such as "Mr." that end in a period
// without ending a sentence.
class AbbreviationList {
 public:
  AbbreviationList() = default;
  explicit AbbreviationList(const std::vector<std::string>& tokens);

  static AbbreviationList english_default();
  // One token per line; blank lines and lines starting with '#' are skipped.
  static AbbreviationList parse(std::string_view content);
  static AbbreviationList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::set<std::string> tokens_;
};

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  virtual std::vector<std::string> split(std::string_view text,
                                         std::string_view language) const = 0;
};

/// Deterministic punctuation-driven splitter.
///
/// Latin-script terminals (. ! ?) end a sentence when followed by whitespace
/// or end of text, unless the period closes a listed abbreviation or sits
/// between two digits. Chinese/Japanese terminals (。！？…) end a sentence
/// unconditionally. Runs of terminals and trailing closing quotes/brackets
/// stay with the sentence they end.
class RuleBasedSplitter final : public SentenceSplitter {
 public:
  RuleBasedSplitter() : RuleBasedSplitter(AbbreviationList::english_default()) {}
  explicit RuleBasedSplitter(AbbreviationList abbreviations)
      : abbreviations_(std::move(abbreviations)) {}

  std::vector<std::string> split(std::string_view text, std::string_view language) const override;

 private:
  AbbreviationList abbreviations_;
};

bool is_cjk_language(std::string_view language);

// split_sentences with the default rule-based splitter.
std::vector<std::string> split_sentences(std::string_view text, std::string_view language);

/// Pairs segment i with translated_sentences[i]. Segment i owns
/// [start_i, start_{i+1}); the last slot ends at the video duration.
/// Throws AlignmentMismatch when the counts differ.
std::vector<AlignedSentence> align(const Transcript& transcript,
                                   const std::vector<std::string>& translated_sentences);

}  // namespace vidloc
