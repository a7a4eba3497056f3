#include "vidloc/alignment.hpp"

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"

namespace vidloc {

namespace {

bool is_latin_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

bool is_cjk_terminal(char32_t cp) {
  return cp == U'。' || cp == U'！' || cp == U'？' || cp == U'…';
}

bool is_closer(char32_t cp) {
  switch (cp) {
    case U'"':
    case U'\'':
    case U')':
    case U']':
    case U'”':
    case U'’':
    case U'»':
    case U'」':
    case U'』':
    case U'）':
      return true;
    default:
      return false;
  }
}

bool is_opener(char32_t cp) {
  switch (cp) {
    case U'"':
    case U'\'':
    case U'(':
    case U'[':
    case U'“':
    case U'‘':
    case U'«':
    case U'¿':
    case U'¡':
      return true;
    default:
      return false;
  }
}

std::string normalize_abbreviation(std::string_view token) {
  std::string t = text::ascii_lower(text::trim(token));
  if (!t.empty() && t.back() != '.') t.push_back('.');
  return t;
}

struct CodePoint {
  char32_t cp;
  std::size_t begin;
  std::size_t end;
};

std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> cps;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t begin = pos;
    const char32_t cp = text::next_code_point(s, pos);
    cps.push_back({cp, begin, pos});
  }
  return cps;
}

}  // namespace

std::string merge_segments(const Transcript& transcript) {
  std::string out;
  for (const auto& seg : transcript.segments) {
    if (!out.empty()) out.push_back(' ');
    out += seg.text;
  }
  return out;
}

AbbreviationList::AbbreviationList(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    auto n = normalize_abbreviation(t);
    if (n.size() > 1) tokens_.insert(std::move(n));
  }
}

AbbreviationList AbbreviationList::english_default() {
  return AbbreviationList({"Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.", "Mt.",
                           "vs.", "e.g.", "i.e.", "approx.", "Sra.", "Srta.", "Dra."});
}

AbbreviationList AbbreviationList::parse(std::string_view content) {
  std::vector<std::string> tokens;
  for (const auto& line : text::split_lines(text::strip_bom(content))) {
    const auto body = text::trim(line);
    if (body.empty() || body.starts_with('#')) continue;
    tokens.emplace_back(body);
  }
  return AbbreviationList(tokens);
}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

bool AbbreviationList::contains(std::string_view token) const {
  return tokens_.contains(text::ascii_lower(token));
}

bool is_cjk_language(std::string_view language) {
  const auto primary = text::ascii_lower(language.substr(0, language.find_first_of("-_")));
  return primary == "zh" || primary == "ja" || primary == "yue";
}

std::vector<std::string> RuleBasedSplitter::split(std::string_view input,
                                                  std::string_view language) const {
  std::vector<std::string> sentences;
  if (!text::is_valid_utf8(input)) {
    throw Error(ErrorCode::PreconditionViolation, "split_sentences: text is not valid UTF-8");
  }
  const auto cps = decode(input);
  const bool cjk = is_cjk_language(language);

  std::size_t sentence_begin = 0;  // byte offset
  auto emit = [&](std::size_t end_byte) {
    const auto body = text::trim(input.substr(sentence_begin, end_byte - sentence_begin));
    if (!body.empty()) sentences.emplace_back(body);
    sentence_begin = end_byte;
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i].cp;
    const bool cjk_term = cjk && is_cjk_terminal(cp);
    if (!cjk_term && !is_latin_terminal(cp)) {
      ++i;
      continue;
    }

    // Swallow the whole terminal run ("?!", "...", "。」").
    const std::size_t run_begin = i;
    std::size_t j = i;
    bool run_has_cjk = false;
    while (j < cps.size() &&
           (is_latin_terminal(cps[j].cp) || (cjk && is_cjk_terminal(cps[j].cp)))) {
      run_has_cjk = run_has_cjk || (cjk && is_cjk_terminal(cps[j].cp));
      ++j;
    }
    const std::size_t run_end = j;
    while (j < cps.size() && is_closer(cps[j].cp)) ++j;

    const bool at_end = j == cps.size();
    const bool space_follows = at_end || text::is_space(cps[j].cp);

    bool split_here = run_has_cjk || space_follows;
    // A lone period before whitespace may still close an abbreviation.
    // Decimals ("2.5") never reach here: no whitespace follows their period.
    if (split_here && !run_has_cjk && !at_end && run_end - run_begin == 1 && cp == U'.') {
      std::size_t tok = run_begin;
      while (tok > 0 && !text::is_space(cps[tok - 1].cp)) --tok;
      while (tok < run_begin && is_opener(cps[tok].cp)) ++tok;
      const auto token = input.substr(cps[tok].begin, cps[run_begin].end - cps[tok].begin);
      if (abbreviations_.contains(token)) split_here = false;
    }

    if (split_here) emit(at_end ? input.size() : cps[j].begin);
    i = j;
  }
  emit(input.size());
  return sentences;
}

std::vector<std::string> split_sentences(std::string_view text, std::string_view language) {
  static const RuleBasedSplitter splitter;
  return splitter.split(text, language);
}

std::vector<AlignedSentence> align(const Transcript& transcript,
                                   const std::vector<std::string>& translated_sentences) {
  const auto& segs = transcript.segments;
  if (segs.size() != translated_sentences.size()) {
    throw AlignmentMismatch(segs.size(), translated_sentences.size());
  }
  std::vector<AlignedSentence> out;
  out.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    AlignedSentence s;
    s.index = segs[i].index;
    s.original_text = segs[i].text;
    s.translated_text = translated_sentences[i];
    s.slot_start = segs[i].start;
    s.slot_end = i + 1 < segs.size() ? segs[i + 1].start : transcript.duration;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace vidloc
