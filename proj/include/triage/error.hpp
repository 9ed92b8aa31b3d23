#pragma once

#include <stdexcept>
#include <string>

namespace triage {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kData = 2,
  kExternalService = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kData; }
};

/// Caller violated an operation's precondition (bad argument, bad flag).
class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

/// Input data could not be parsed or violates a domain invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Remote inference or annotation endpoint failed after retries.
class ExternalServiceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kExternalService; }
};

// Annotation-service errors; the HTTP layer maps these onto status codes.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

class AuthorizationError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Raised when an annotation channel closes before every queried item is labeled.
class ChannelClosedError : public Error {
 public:
  using Error::Error;
};

}  // namespace triage
