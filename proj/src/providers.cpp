#include "vidloc/providers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "vidloc/alignment.hpp"
#include "vidloc/error.hpp"
#include "vidloc/util.hpp"
#include "vidloc/wav.hpp"

namespace vidloc {

using json = nlohmann::json;

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Translation: return "translation";
    case ProviderKind::Speech: return "speech";
    case ProviderKind::Similarity: return "similarity";
  }
  return "unknown";
}

std::string_view to_string(SimilarityMetric metric) {
  return metric == SimilarityMetric::F1 ? "f1" : "cosine";
}

std::optional<SimilarityMetric> similarity_metric_from_string(std::string_view name) {
  if (name == "f1") return SimilarityMetric::F1;
  if (name == "cosine") return SimilarityMetric::Cosine;
  return std::nullopt;
}

void validate(const ProviderConfig& config) {
  if (config.name.empty()) throw Error(ErrorCode::InvalidConfig, "provider name is empty");
  if (!(config.rate_limit > 0.0) || !std::isfinite(config.rate_limit)) {
    throw Error(ErrorCode::InvalidConfig, "provider " + config.name + ": rate_limit must be > 0");
  }
  if (config.timeout.count() <= 0) {
    throw Error(ErrorCode::InvalidConfig, "provider " + config.name + ": timeout must be > 0");
  }
}

ProviderConfig provider_config_from_json(const json& j, ProviderKind kind) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "provider config must be an object");
  ProviderConfig c;
  c.kind = kind;
  try {
    c.name = j.at("name").get<std::string>();
    c.endpoint = j.value("endpoint", "");
    if (j.contains("auth") && !j["auth"].is_null()) c.auth = j["auth"].get<std::string>();
    c.rate_limit = j.value("rate_limit", c.rate_limit);
    if (j.contains("timeout")) {
      c.timeout = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(j["timeout"].get<double>() * 1000.0)));
    }
    c.options = j.value("options", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("provider config: ") + e.what());
  }
  validate(c);
  return c;
}

json to_json(const ProviderConfig& c) {
  json j{{"kind", to_string(c.kind)},
         {"name", c.name},
         {"endpoint", c.endpoint},
         {"rate_limit", c.rate_limit},
         {"timeout", static_cast<double>(c.timeout.count()) / 1000.0},
         {"options", c.options}};
  // The secret reference itself is config, never the resolved secret.
  if (c.auth) j["auth"] = *c.auth;
  return j;
}

std::optional<std::string> resolve_secret(const std::optional<std::string>& ref) {
  if (!ref) return std::nullopt;
  if (ref->starts_with("env:")) {
    const char* v = std::getenv(ref->substr(4).c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  }
  return ref;
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(1.0 / per_second))),
      next_slot_(Clock::now()) {
  if (!(per_second > 0.0)) throw Error(ErrorCode::InvalidConfig, "rate limit must be positive");
}

void RateLimiter::acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(Clock::now(), next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

void run_with_retry(const RetryPolicy& policy, const std::function<void()>& call) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      call();
      return;
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::ProviderUnavailable ||
                             e.code() == ErrorCode::RateLimited;
      if (!retryable || attempt >= policy.max_attempts) throw;
      spdlog::warn("provider call failed ({}), retry {}/{} in {} ms", e.what(), attempt,
                   policy.max_attempts - 1, delay.count());
      if (policy.sleep) {
        policy.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.factor));
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' ||
                        s.back() == '\r' || s.back() == '\v' || s.back() == '\f')) {
    s.pop_back();
  }
  return s;
}

}  // namespace

Translator::Translator(ProviderConfig config, std::shared_ptr<TranslationBackend> backend,
                       RetryPolicy retry)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      retry_(std::move(retry)),
      limiter_(std::make_shared<RateLimiter>(config_.rate_limit)) {
  validate(config_);
}

std::string Translator::translate(std::string_view text, std::string_view source,
                                  std::string_view target) {
  if (text::trim(text).empty()) {
    throw Error(ErrorCode::PreconditionViolation, "translate: empty text");
  }
  if (source == target) {
    throw Error(ErrorCode::PreconditionViolation, "translate: source and target are both " +
                                                      std::string(source));
  }
  std::string out;
  run_with_retry(retry_, [&] {
    limiter_->acquire();
    out = backend_->translate(text, source, target);
  });
  return rtrim(std::move(out));
}

SpeechSynthesizer::SpeechSynthesizer(ProviderConfig config, std::shared_ptr<SpeechBackend> backend,
                                     RetryPolicy retry)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      retry_(std::move(retry)),
      limiter_(std::make_shared<RateLimiter>(config_.rate_limit)) {
  validate(config_);
}

std::filesystem::path SpeechSynthesizer::asset_path(std::string_view text,
                                                    std::string_view language,
                                                    std::size_t sentence_index,
                                                    const std::filesystem::path& out_dir) const {
  const std::string key = config_.name + '\n' + std::string(language) + '\n' + std::string(text);
  char prefix[32];
  std::snprintf(prefix, sizeof(prefix), "%04zu-", sentence_index);
  return out_dir / (prefix + sha256_hex(key).substr(0, 16) + ".wav");
}

AudioAsset SpeechSynthesizer::synthesize(std::string_view text, std::string_view language,
                                         std::size_t sentence_index,
                                         const std::filesystem::path& out_dir) {
  if (text::trim(text).empty()) {
    throw Error(ErrorCode::PreconditionViolation, "synthesize: empty text");
  }
  const auto path = asset_path(text, language, sentence_index, out_dir);
  run_with_retry(retry_, [&] {
    limiter_->acquire();
    backend_->synthesize(text, language, path);
  });
  const auto info = wav::probe_file(path);
  if (info.duration().count() <= 0) {
    throw Error(ErrorCode::AudioDecodeError, "synthesized audio has zero duration: " +
                                                 path.string());
  }
  return AudioAsset{sentence_index, path, info.duration(), std::string(language)};
}

SimilarityScorer::SimilarityScorer(ProviderConfig config,
                                   std::shared_ptr<SimilarityBackend> backend, RetryPolicy retry)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      retry_(std::move(retry)),
      limiter_(std::make_shared<RateLimiter>(config_.rate_limit)) {
  validate(config_);
}

double SimilarityScorer::similarity(std::string_view a, std::string_view b,
                                    SimilarityMetric metric) {
  if (text::trim(a).empty() || text::trim(b).empty()) {
    throw Error(ErrorCode::PreconditionViolation, "similarity: empty sentence");
  }
  double raw = 0.0;
  run_with_retry(retry_, [&] {
    limiter_->acquire();
    raw = backend_->score(a, b, metric);
  });
  if (!std::isfinite(raw)) {
    throw Error(ErrorCode::ProviderUnavailable,
                "similarity provider " + config_.name + " returned a non-finite score");
  }
  const double lo = metric == SimilarityMetric::F1 ? 0.0 : -1.0;
  const double clamped = std::clamp(raw, lo, 1.0);
  if (std::abs(clamped - raw) > 1e-9) {
    spdlog::warn("similarity provider {} returned {} for metric {}; clamped to {}", config_.name,
                 raw, to_string(metric), clamped);
  }
  return clamped;
}

// ---------------------------------------------------------------------------

namespace {

void require_kind(const ProviderConfig& config, ProviderKind kind) {
  if (config.kind != kind) {
    throw Error(ErrorCode::InvalidConfig, "provider " + config.name + " is not a " +
                                              std::string(to_string(kind)) + " provider");
  }
}

}  // namespace

std::shared_ptr<Translator> make_translator(const ProviderConfig& config, RetryPolicy retry) {
  require_kind(config, ProviderKind::Translation);
  std::shared_ptr<TranslationBackend> backend;
  if (config.name == "identity") {
    backend = std::make_shared<IdentityTranslation>();
  } else if (config.name == "dictionary") {
    std::map<std::string, std::string> table;
    const auto t = config.options.value("table", json::object());
    for (const auto& [k, v] : t.items()) table.emplace(k, v.get<std::string>());
    backend = std::make_shared<DictionaryTranslation>(std::move(table));
  } else if (config.name == "mutate") {
    const auto mode = config.options.value("mode", "merge-first");
    if (mode == "merge-first") {
      backend = std::make_shared<SentenceMutationTranslation>(
          SentenceMutationTranslation::Mode::MergeFirst);
    } else if (mode == "split-first") {
      backend = std::make_shared<SentenceMutationTranslation>(
          SentenceMutationTranslation::Mode::SplitFirst);
    } else {
      throw Error(ErrorCode::InvalidConfig, "mutate: unknown mode " + mode);
    }
  } else if (config.name == "http") {
    backend = std::make_shared<HttpTranslation>(config);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown translation provider: " + config.name);
  }
  return std::make_shared<Translator>(config, std::move(backend), std::move(retry));
}

std::shared_ptr<SpeechSynthesizer> make_speech_synthesizer(const ProviderConfig& config,
                                                           RetryPolicy retry) {
  require_kind(config, ProviderKind::Speech);
  std::shared_ptr<SpeechBackend> backend;
  if (config.name == "mock") {
    backend = std::make_shared<MockSpeech>();
  } else if (config.name == "http") {
    backend = std::make_shared<HttpSpeech>(config);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown speech provider: " + config.name);
  }
  return std::make_shared<SpeechSynthesizer>(config, std::move(backend), std::move(retry));
}

std::shared_ptr<SimilarityScorer> make_similarity_scorer(const ProviderConfig& config,
                                                         RetryPolicy retry) {
  require_kind(config, ProviderKind::Similarity);
  std::shared_ptr<SimilarityBackend> backend;
  if (config.name == "token-overlap") {
    const auto counting = config.options.value("counting", "distinct");
    if (counting != "distinct" && counting != "multiset") {
      throw Error(ErrorCode::InvalidConfig, "token-overlap: unknown counting " + counting);
    }
    backend = std::make_shared<TokenOverlapSimilarity>(
        counting == "multiset" ? TokenOverlapSimilarity::Counting::Multiset
                               : TokenOverlapSimilarity::Counting::Distinct);
  } else if (config.name == "sidecar") {
    backend = std::make_shared<SidecarSimilarity>(config);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown similarity provider: " + config.name);
  }
  return std::make_shared<SimilarityScorer>(config, std::move(backend), std::move(retry));
}

// ---------------------------------------------------------------------------

std::string DictionaryTranslation::translate(std::string_view text, std::string_view source,
                                             std::string_view) {
  const std::string whole(text::trim(text));
  if (const auto it = table_.find(whole); it != table_.end()) return it->second;
  std::string out;
  for (const auto& sentence : split_sentences(whole, source)) {
    if (!out.empty()) out.push_back(' ');
    const auto it = table_.find(sentence);
    out += it != table_.end() ? it->second : sentence;
  }
  return out;
}

std::string SentenceMutationTranslation::translate(std::string_view text, std::string_view source,
                                                   std::string_view) {
  auto sentences = split_sentences(text, source);
  if (mode_ == Mode::MergeFirst && sentences.size() >= 2) {
    std::string first = sentences[0];
    while (!first.empty() && (first.back() == '.' || first.back() == '!' || first.back() == '?')) {
      first.pop_back();
    }
    sentences[1] = first + ", " + sentences[1];
    sentences.erase(sentences.begin());
  } else if (mode_ == Mode::SplitFirst) {
    for (auto& s : sentences) {
      const auto space = s.find(' ');
      if (space == std::string::npos || space == 0) continue;
      s.insert(space, ".");
      break;
    }
  }
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

Millis MockSpeech::duration_for(std::string_view text) {
  const auto chars = static_cast<std::int64_t>(text::code_point_count(text));
  return std::max(kMinimum, kPerCharacter * chars);
}

void MockSpeech::synthesize(std::string_view text, std::string_view,
                            const std::filesystem::path& out_file) {
  wav::write_silence(out_file, duration_for(text));
}

// ---------------------------------------------------------------------------

namespace {

bool is_ideograph(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FFFF);
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
  }
  if (text::is_space(cp)) return false;
  if (cp >= 0x00A0 && cp <= 0x00BF) return false;  // Latin-1 punctuation and symbols
  if (cp == 0x00D7 || cp == 0x00F7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
    return false;  // full-width punctuation
  }
  return true;
}

}  // namespace

std::vector<std::string> TokenOverlapSimilarity::tokenize(std::string_view s) {
  std::vector<char32_t> cps;
  std::size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = text::next_code_point(s, pos);
    if (cp == U'’' || cp == U'‘') cp = U'\'';
    if (cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
    cps.push_back(cp);
  }

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_ideograph(cp)) {
      flush();
      text::append_utf8(current, cp);
      flush();
    } else if (is_word_char(cp)) {
      text::append_utf8(current, cp);
    } else if (cp == U'\'' && !current.empty() && i + 1 < cps.size() &&
               is_word_char(cps[i + 1]) && !is_ideograph(cps[i + 1])) {
      current.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

double TokenOverlapSimilarity::score(std::string_view a, std::string_view b,
                                     SimilarityMetric metric) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  if (ta.empty() || tb.empty()) return ta.empty() && tb.empty() ? 1.0 : 0.0;

  std::map<std::string, int> ca;
  std::map<std::string, int> cb;
  for (const auto& t : ta) ++ca[t];
  for (const auto& t : tb) ++cb[t];

  if (metric == SimilarityMetric::Cosine) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [t, n] : ca) {
      na += double(n) * n;
      if (const auto it = cb.find(t); it != cb.end()) dot += double(n) * it->second;
    }
    for (const auto& [t, n] : cb) nb += double(n) * n;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }

  std::size_t common = 0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  if (counting_ == Counting::Distinct) {
    size_a = ca.size();
    size_b = cb.size();
    for (const auto& [t, n] : ca) common += cb.contains(t) ? 1 : 0;
  } else {
    size_a = ta.size();
    size_b = tb.size();
    for (const auto& [t, n] : ca) {
      if (const auto it = cb.find(t); it != cb.end()) {
        common += static_cast<std::size_t>(std::min(n, it->second));
      }
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(size_a + size_b);
}

}  // namespace vidloc
