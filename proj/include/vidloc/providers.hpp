#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidloc/text.hpp"

namespace vidloc {

enum class ProviderKind { Translation, Speech, Similarity };

std::string_view to_string(ProviderKind kind);

/// Connection settings for one external (or in-repo reference) service.
///
/// `name` selects the implementation: translation providers are "identity",
/// "dictionary", "mutate" and "http"; speech providers are "mock" and
/// "http"; similarity providers are "token-overlap" and "sidecar".
/// `options` carries implementation-specific settings such as a dictionary
/// table.
struct ProviderConfig {
  ProviderKind kind = ProviderKind::Translation;
  std::string name;
  std::string endpoint;
  std::optional<std::string> auth;  // "env:VAR" or a literal token
  double rate_limit = 10.0;         // requests per second
  std::chrono::milliseconds timeout{30'000};
  nlohmann::json options = nlohmann::json::object();
};

// Throws Error(InvalidConfig) unless rate_limit > 0 and timeout > 0.
void validate(const ProviderConfig& config);
ProviderConfig provider_config_from_json(const nlohmann::json& j, ProviderKind kind);
nlohmann::json to_json(const ProviderConfig& config);

// Resolves "env:NAME" to the variable's value; other strings pass through.
std::optional<std::string> resolve_secret(const std::optional<std::string>& ref);

struct AudioAsset {
  std::size_t sentence_index = 0;
  std::filesystem::path path;
  Millis duration{0};
  std::string language;

  bool operator==(const AudioAsset&) const = default;
};

enum class SimilarityMetric { F1, Cosine };

std::string_view to_string(SimilarityMetric metric);
std::optional<SimilarityMetric> similarity_metric_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Rate limiting and retries

/// Spaces calls at least 1/rate apart. Thread-safe; callers block in
/// acquire() until their reserved slot arrives.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);

  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  Clock::duration interval_;
  Clock::time_point next_slot_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for

  static RetryPolicy none() { return RetryPolicy{1, std::chrono::milliseconds{0}, 1.0, {}}; }
};

// Runs `call`, retrying ProviderUnavailable and RateLimited errors with
// exponential backoff. Other errors propagate immediately.
void run_with_retry(const RetryPolicy& policy, const std::function<void()>& call);

// ---------------------------------------------------------------------------
// Backends: the raw provider protocol, one request per call.

class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::string translate(std::string_view text, std::string_view source,
                                std::string_view target) = 0;
};

class SpeechBackend {
 public:
  virtual ~SpeechBackend() = default;
  // Writes audio for `text` to `out_file`.
  virtual void synthesize(std::string_view text, std::string_view language,
                          const std::filesystem::path& out_file) = 0;
};

class SimilarityBackend {
 public:
  virtual ~SimilarityBackend() = default;
  virtual double score(std::string_view a, std::string_view b, SimilarityMetric metric) = 0;
};

// ---------------------------------------------------------------------------
// Client handles. Shareable across threads; the rate limiter is the only
// synchronization point.

class Translator {
 public:
  Translator(ProviderConfig config, std::shared_ptr<TranslationBackend> backend,
             RetryPolicy retry = {});

  /// Returns the provider's output with trailing whitespace removed.
  /// Requires non-empty text and source != target.
  std::string translate(std::string_view text, std::string_view source, std::string_view target);

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<TranslationBackend> backend_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
};

class SpeechSynthesizer {
 public:
  SpeechSynthesizer(ProviderConfig config, std::shared_ptr<SpeechBackend> backend,
                    RetryPolicy retry = {});

  /// Writes one WAV under `out_dir` and returns its decoded duration.
  /// File names are content-addressed, so identical requests land on the
  /// same path.
  AudioAsset synthesize(std::string_view text, std::string_view language,
                        std::size_t sentence_index, const std::filesystem::path& out_dir);

  std::filesystem::path asset_path(std::string_view text, std::string_view language,
                                   std::size_t sentence_index,
                                   const std::filesystem::path& out_dir) const;

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<SpeechBackend> backend_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
};

class SimilarityScorer {
 public:
  SimilarityScorer(ProviderConfig config, std::shared_ptr<SimilarityBackend> backend,
                   RetryPolicy retry = {});

  /// f1 results are clamped to [0,1] and cosine results to [-1,1].
  double similarity(std::string_view a, std::string_view b, SimilarityMetric metric);

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::shared_ptr<SimilarityBackend> backend_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Builds clients from configuration. Throws Error(InvalidConfig) for an
// unknown implementation name.
std::shared_ptr<Translator> make_translator(const ProviderConfig& config, RetryPolicy retry = {});
std::shared_ptr<SpeechSynthesizer> make_speech_synthesizer(const ProviderConfig& config,
                                                           RetryPolicy retry = {});
std::shared_ptr<SimilarityScorer> make_similarity_scorer(const ProviderConfig& config,
                                                         RetryPolicy retry = {});

// ---------------------------------------------------------------------------
// In-repo reference backends

class IdentityTranslation final : public TranslationBackend {
 public:
  std::string translate(std::string_view text, std::string_view, std::string_view) override {
    return std::string(text);
  }
};

/// Table-driven translator. A whole-text entry wins; otherwise each sentence
/// of the input is looked up on its own and unknown sentences pass through.
class DictionaryTranslation final : public TranslationBackend {
 public:
  explicit DictionaryTranslation(std::map<std::string, std::string> table)
      : table_(std::move(table)) {}

  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) override;

 private:
  std::map<std::string, std::string> table_;
};

/// Identity translator that damages sentence structure on purpose, to
/// exercise the alignment failure path. MergeFirst fuses the first two
/// sentences; SplitFirst breaks the first sentence in two.
class SentenceMutationTranslation final : public TranslationBackend {
 public:
  enum class Mode { MergeFirst, SplitFirst };

  explicit SentenceMutationTranslation(Mode mode) : mode_(mode) {}

  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) override;

 private:
  Mode mode_;
};

/// Silent audio whose length models speech: 60 ms per code point, never
/// shorter than 200 ms.
class MockSpeech final : public SpeechBackend {
 public:
  static constexpr Millis kPerCharacter{60};
  static constexpr Millis kMinimum{200};

  static Millis duration_for(std::string_view text);

  void synthesize(std::string_view text, std::string_view language,
                  const std::filesystem::path& out_file) override;
};

/// Token-overlap reference scorer.
///
/// Tokens: ASCII-lowercased runs of letters/digits; an apostrophe between
/// two word characters stays inside the token ("we'll"), curly apostrophes
/// count as straight ones, and each CJK ideograph is its own token.
/// F1 = 2|A∩B| / (|A|+|B|) over distinct token types by default, or over
/// token multisets when constructed with Counting::Multiset. Cosine is the
/// term-frequency cosine.
class TokenOverlapSimilarity final : public SimilarityBackend {
 public:
  enum class Counting { Distinct, Multiset };

  explicit TokenOverlapSimilarity(Counting counting = Counting::Distinct) : counting_(counting) {}

  static std::vector<std::string> tokenize(std::string_view s);

  double score(std::string_view a, std::string_view b, SimilarityMetric metric) override;

 private:
  Counting counting_;
};

// ---------------------------------------------------------------------------
// External adapters (implemented in provider_adapters.cpp)

/// POST {"text","source","target"} -> {"text"}.
class HttpTranslation final : public TranslationBackend {
 public:
  explicit HttpTranslation(ProviderConfig config) : config_(std::move(config)) {}
  std::string translate(std::string_view text, std::string_view source,
                        std::string_view target) override;

 private:
  ProviderConfig config_;
};

/// POST {"text","language"} -> audio/wav body.
class HttpSpeech final : public SpeechBackend {
 public:
  explicit HttpSpeech(ProviderConfig config) : config_(std::move(config)) {}
  void synthesize(std::string_view text, std::string_view language,
                  const std::filesystem::path& out_file) override;

 private:
  ProviderConfig config_;
};

/// Out-of-process scorer speaking newline-delimited JSON: request
/// {"a","b","metric"}, response {"score"}. An http(s):// endpoint is POSTed
/// one request per call; anything else is run as a shell command and kept
/// alive across requests.
class SidecarSimilarity final : public SimilarityBackend {
 public:
  explicit SidecarSimilarity(ProviderConfig config);
  ~SidecarSimilarity() override;

  double score(std::string_view a, std::string_view b, SimilarityMetric metric) override;

 private:
  struct Channel;
  ProviderConfig config_;
  std::mutex mu_;
  std::unique_ptr<Channel> channel_;
};

// Maps an HTTP status to the provider error taxonomy: 429 -> RateLimited,
// other 4xx -> ProviderRejected, everything else non-2xx ->
// ProviderUnavailable. Returns normally for 2xx.
void check_http_status(int status, std::string_view provider, std::string_view body);

}  // namespace vidloc
