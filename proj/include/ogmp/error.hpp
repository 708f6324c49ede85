#pragma once

#include <stdexcept>
#include <string>

namespace ogmp {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  NonConvergence,
  SingularInnerMatrix,
  InternalSolverFailure,
  OutOfRange,
  InfeasibleLayout,
  DegenerateInput,
  NaNDetected,
  SteppingTerminatedEpisode,
  EmptyInput,
  ConfigError,
  IoFailure,
  ChecksumMismatch,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-checkable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace ogmp
