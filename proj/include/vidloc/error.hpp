#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vidloc {

// Every failure the library reports carries one of these codes. The string
// form (error_code_name) is what the CLI prints and the HTTP API returns.
enum class ErrorCode {
  // transcript
  EmptyTranscript,
  NonMonotonicTimestamps,
  MalformedEntry,
  DurationMissing,
  // alignment
  AlignmentMismatch,
  // providers
  ProviderUnavailable,
  ProviderRejected,
  RateLimited,
  AudioDecodeError,
  InvalidConfig,
  // confidence
  MissingScore,
  LengthMismatch,
  // sync
  InputMismatch,
  SlotCoverage,
  // assembly
  MissingAsset,
  ToolFailure,
  DurationDrift,
  // contribution service
  UnknownVideo,
  UnknownSentence,
  UnknownTask,
  Unauthenticated,
  Forbidden,
  EmptyProposal,
  NoOpProposal,
  StorageFailure,
  // shared
  PreconditionViolation,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A record that failed the file grammar. `record` is the zero-based record
// (segment/line) index; nullopt means the document header or envelope.
class MalformedEntry : public Error {
 public:
  MalformedEntry(std::optional<std::size_t> record, const std::string& what);

  std::optional<std::size_t> record() const noexcept { return record_; }

 private:
  std::optional<std::size_t> record_;
};

class AlignmentMismatch : public Error {
 public:
  AlignmentMismatch(std::size_t expected, std::size_t got);

  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t expected_;
  std::size_t got_;
};

// Retryable provider failures are ProviderUnavailable; everything else a
// provider reports is terminal for the request.
inline bool is_retryable(ErrorCode code) {
  return code == ErrorCode::ProviderUnavailable;
}

}  // namespace vidloc
