#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "vidloc/alignment.hpp"
#include "vidloc/confidence.hpp"
#include "vidloc/error.hpp"
#include "vidloc/pipeline.hpp"
#include "vidloc/providers.hpp"
#include "vidloc/transcript.hpp"
#include "vidloc/util.hpp"

namespace vidloc::testing {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "vidloc-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline fs::path fixtures_dir() { return fs::path(VIDLOC_FIXTURES_DIR); }

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline std::int64_t uniform_ms(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words{
      "we",     "put",   "seven", "in",     "the",    "ones",   "place",  "then",
      "carry",  "one",   "add",   "two",    "apples", "and",    "tens",   "column",
      "look",   "at",    "this",  "number", "it",     "is",     "bigger", "than",
      "ten",    "so",    "write", "down",   "three",  "here",   "now",    "count",
      "every",  "block", "read",  "story",  "again",  "slowly", "notice", "pattern"};
  return words;
}

// One well-formed English sentence: capitalized words ending in a period.
inline std::string random_sentence(Rng& rng) {
  const auto& pool = word_pool();
  const auto n = uniform(rng, 2, 9);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w = pool[uniform(rng, 0, pool.size() - 1)];
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (i > 0) s += ' ';
    s += w;
  }
  const char* ends[] = {".", ".", ".", "!", "?"};
  s += ends[uniform(rng, 0, 4)];
  return s;
}

// Valid transcript whose segments are single sentences.
inline Transcript random_transcript(Rng& rng, std::string video_id, std::size_t max_segments = 12) {
  Transcript t;
  t.video_id = std::move(video_id);
  t.language = "en";
  const auto n = uniform(rng, 1, max_segments);
  std::int64_t at = coin(rng, 0.3) ? uniform_ms(rng, 1, 3000) : 0;
  for (std::size_t i = 0; i < n; ++i) {
    t.segments.push_back({i, Millis{at}, random_sentence(rng)});
    at += uniform_ms(rng, 1, 8000);
  }
  t.duration = Millis{at};
  return t;
}

// Free-form valid transcript: arbitrary printable text, including non-ASCII.
inline Transcript random_any_transcript(Rng& rng) {
  static const std::vector<std::string> pieces{
      "a", "Z", "0", "9", " ", ".", "|", "#", "\"", "\\", "{", "}", ":", "é", "你好", "。", "—",
      "\t", "'", "😀", "ß", "ё"};
  Transcript t;
  t.video_id = "v" + std::to_string(uniform(rng, 0, 99999));
  t.language = coin(rng) ? "en" : "zh";
  const auto n = uniform(rng, 1, 20);
  std::int64_t at = uniform_ms(rng, 0, 5000);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    while (true) {
      s.clear();
      const auto len = uniform(rng, 1, 12);
      for (std::size_t k = 0; k < len; ++k) s += pieces[uniform(rng, 0, pieces.size() - 1)];
      const auto trimmed = text::trim(s);
      // A leading '#' would read as a comment in timed lines.
      if (!trimmed.empty() && trimmed.front() != '#') {
        s = std::string(trimmed);
        break;
      }
    }
    t.segments.push_back({i, Millis{at}, s});
    at += uniform_ms(rng, 1, 100000);
  }
  t.duration = Millis{at};
  return t;
}

inline RetryPolicy no_sleep_retry(int attempts = 5) {
  RetryPolicy r;
  r.max_attempts = attempts;
  r.base_delay = 1ms;
  r.sleep = [](std::chrono::milliseconds) {};
  return r;
}

inline ProviderConfig provider(ProviderKind kind, std::string name, double rate = 1e6) {
  ProviderConfig c;
  c.kind = kind;
  c.name = std::move(name);
  c.rate_limit = rate;
  return c;
}

// Translation backend that fails for chosen inputs and counts calls.
class ScriptedTranslation final : public TranslationBackend {
 public:
  std::map<std::string, std::string> table;        // exact-input replies
  std::map<std::string, ErrorCode> failures;       // exact-input errors
  std::vector<std::string> seen;

  std::string translate(std::string_view text, std::string_view, std::string_view) override {
    std::lock_guard lock(mu_);
    seen.emplace_back(text);
    if (const auto f = failures.find(std::string(text)); f != failures.end()) {
      throw Error(f->second, "scripted failure");
    }
    if (const auto t = table.find(std::string(text)); t != table.end()) return t->second;
    return std::string(text);
  }

  std::size_t calls() {
    std::lock_guard lock(mu_);
    return seen.size();
  }

 private:
  std::mutex mu_;
};

// Mock speech that counts how often it was asked to synthesize.
class CountingSpeech final : public SpeechBackend {
 public:
  void synthesize(std::string_view text, std::string_view language,
                  const fs::path& out_file) override {
    {
      std::lock_guard lock(mu_);
      texts_.emplace_back(text);
    }
    inner_.synthesize(text, language, out_file);
  }
  std::vector<std::string> texts() {
    std::lock_guard lock(mu_);
    return texts_;
  }

 private:
  MockSpeech inner_;
  std::mutex mu_;
  std::vector<std::string> texts_;
};

struct OfflineProviders {
  std::shared_ptr<ScriptedTranslation> forward = std::make_shared<ScriptedTranslation>();
  std::shared_ptr<ScriptedTranslation> back = std::make_shared<ScriptedTranslation>();
  std::shared_ptr<CountingSpeech> speech = std::make_shared<CountingSpeech>();

  PipelineProviders handles() const {
    PipelineProviders p;
    p.translator = std::make_shared<Translator>(provider(ProviderKind::Translation, "scripted"),
                                                forward, no_sleep_retry());
    p.back_translator = std::make_shared<Translator>(
        provider(ProviderKind::Translation, "scripted-back"), back, no_sleep_retry());
    p.speech = std::make_shared<SpeechSynthesizer>(provider(ProviderKind::Speech, "mock"), speech,
                                                   no_sleep_retry());
    p.f1 = std::make_shared<SimilarityScorer>(provider(ProviderKind::Similarity, "token-overlap"),
                                              std::make_shared<TokenOverlapSimilarity>(),
                                              no_sleep_retry());
    return p;
  }
};

inline PipelineConfig test_config(std::string target = "es") {
  auto c = PipelineConfig::offline("en", std::move(target));
  c.retry_base_delay = 1ms;
  c.translation.rate_limit = 1e6;
  c.speech.rate_limit = 1e6;
  c.similarity.rate_limit = 1e6;
  if (c.cosine) c.cosine->rate_limit = 1e6;
  return c;
}

inline fs::path write_transcript(const fs::path& dir, const Transcript& t) {
  const auto path = dir / (t.video_id + ".json");
  write_file(path, serialize_transcript(t, TranscriptFormat::CanonicalJson));
  return path;
}

inline std::size_t count_flagged(const PipelineResult& r) {
  std::size_t n = 0;
  for (const auto& s : r.sentences) n += s.classification == Classification::Flagged ? 1 : 0;
  return n;
}

}  // namespace vidloc::testing
