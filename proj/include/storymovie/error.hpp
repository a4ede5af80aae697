#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace storymovie {

enum class ErrorCode {
  EmptyInput,
  EmptyTrack,
  EncodingError,
  WindowExceeded,
  MovieMismatch,
  EmptyCorpus,
  RunMismatch,
  EmptyGroup,
  DuplicateRecord,
  MissingAnswer,
  InvalidRecord,
  InvalidConfig,
  UnparseableVerdict,
  Transport,
  Auth,
  RateLimited,
  MalformedResponse,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyTrack: return "EmptyTrack";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::WindowExceeded: return "WindowExceeded";
    case ErrorCode::MovieMismatch: return "MovieMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::RunMismatch: return "RunMismatch";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::MissingAnswer: return "MissingAnswer";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::Auth: return "Auth";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Non-fatal parse finding. `line` is 1-based, 0 when not tied to a line.
struct Diagnostic {
  std::size_t line = 0;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

/// Input or validation failure. Everything the library rejects because of
/// bad input is reported through this type; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Judge output that does not follow the single-token grammar. The raw
/// response is kept so callers can log or persist it.
class UnparseableVerdictError : public Error {
 public:
  explicit UnparseableVerdictError(std::string response)
      : Error(ErrorCode::UnparseableVerdict,
              "cannot extract a verdict from response: " + response),
        response_(std::move(response)) {}

  const std::string& response() const noexcept { return response_; }

 private:
  std::string response_;
};

}  // namespace storymovie
