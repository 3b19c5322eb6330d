#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ats {

// Failure categories. The service layer maps each to an HTTP status.
enum class ErrorKind {
  Malformed,     // structurally bad input (wrong types, out-of-domain values)
  Invalid,       // well-formed input that violates a semantic contract
  NotFound,
  Forbidden,     // access to locked or foreign content
  Unauthorized,  // missing or unknown credentials
  NoData,        // operation needs stored data that does not exist yet
  Config,        // bad configuration or catalog
  Internal,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Strict-mode rejection of a single-face frame lacking pose or affect.
class FrameError : public Error {
 public:
  FrameError(long long frame_index, const std::string& message)
      : Error(ErrorKind::Invalid, message), frame_index_(frame_index) {}

  long long frame_index() const noexcept { return frame_index_; }

 private:
  long long frame_index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ats
