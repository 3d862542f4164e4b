#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace copypaste {

enum class ErrorKind {
  kInvalidArgument,
  kFormat,            // a model reply that does not follow its output grammar
  kExtractionFailed,  // no verifiable sentence could be extracted
  kGenerationFailed,
  kJudgeFormat,
  kTransport,         // retries exhausted or non-retryable HTTP failure
  kProtocol,          // backend payload does not match the wire shape
  kScorer,
  kEmptyBucket,
  kPairing,
  kTraceDepth,
  kTraceFormat,
  kConfig,
  kIo,
  kEmpty,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Transport and protocol errors keep the raw backend payload for debugging.
class BackendError : public Error {
 public:
  BackendError(ErrorKind kind, const std::string& message, std::string payload,
               int status = 0)
      : Error(kind, message), payload_(std::move(payload)), status_(status) {}

  const std::string& payload() const noexcept { return payload_; }
  int status() const noexcept { return status_; }

 private:
  std::string payload_;
  int status_;
};

/// Thrown by backends for failures worth retrying (timeouts, 429, 5xx).
class TransientError : public BackendError {
 public:
  using BackendError::BackendError;
};

struct FormatError {
  ErrorKind kind = ErrorKind::kFormat;
  std::string message;
};

/// Value-or-error result used by the structured-output parsers, which must
/// never throw on arbitrary model text.
template <typename T>
class Parsed {
 public:
  Parsed(T value) : state_(std::move(value)) {}  // NOLINT(implicit)
  Parsed(FormatError error) : state_(std::move(error)) {}  // NOLINT(implicit)

  bool ok() const noexcept { return std::holds_alternative<T>(state_); }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& {
    if (!ok()) throw Error(error().kind, error().message);
    return std::get<T>(state_);
  }
  T&& value() && {
    if (!ok()) throw Error(error().kind, error().message);
    return std::get<T>(std::move(state_));
  }
  const FormatError& error() const { return std::get<FormatError>(state_); }

 private:
  std::variant<T, FormatError> state_;
};

}  // namespace copypaste
