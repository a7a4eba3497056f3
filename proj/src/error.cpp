#include "vidloc/error.hpp"

namespace vidloc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyTranscript: return "EmptyTranscript";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::MalformedEntry: return "MalformedEntry";
    case ErrorCode::DurationMissing: return "DurationMissing";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ProviderRejected: return "ProviderRejected";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::AudioDecodeError: return "AudioDecodeError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InputMismatch: return "InputMismatch";
    case ErrorCode::SlotCoverage: return "SlotCoverage";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::ToolFailure: return "ToolFailure";
    case ErrorCode::DurationDrift: return "DurationDrift";
    case ErrorCode::UnknownVideo: return "UnknownVideo";
    case ErrorCode::UnknownSentence: return "UnknownSentence";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::Unauthenticated: return "Unauthenticated";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::EmptyProposal: return "EmptyProposal";
    case ErrorCode::NoOpProposal: return "NoOpProposal";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string malformed_message(std::optional<std::size_t> record, const std::string& what) {
  if (record) return "malformed record " + std::to_string(*record) + ": " + what;
  return "malformed document: " + what;
}

}  // namespace

MalformedEntry::MalformedEntry(std::optional<std::size_t> record, const std::string& what)
    : Error(ErrorCode::MalformedEntry, malformed_message(record, what)), record_(record) {}

AlignmentMismatch::AlignmentMismatch(std::size_t expected, std::size_t got)
    : Error(ErrorCode::AlignmentMismatch,
            "expected " + std::to_string(expected) + " translated sentences, got " +
                std::to_string(got)),
      expected_(expected),
      got_(got) {}

}  // namespace vidloc
