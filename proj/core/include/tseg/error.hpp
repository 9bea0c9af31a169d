#pragma once

#include <stdexcept>
#include <string>

namespace tseg {

enum class ErrorCode {
  precondition,
  numeric,
  io,
  config,
  checkpoint_corrupt,
  checkpoint_version,
  checkpoint_shape,
};

constexpr const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
    case ErrorCode::checkpoint_corrupt: return "checkpoint_corrupt";
    case ErrorCode::checkpoint_version: return "checkpoint_version";
    case ErrorCode::checkpoint_shape: return "checkpoint_shape";
  }
  return "unknown";
}

/// Single exception type; the code keeps failure categories machine-checkable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace tseg
