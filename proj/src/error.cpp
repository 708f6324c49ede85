#include "ogmp/error.hpp"

namespace ogmp {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularInnerMatrix: return "SingularInnerMatrix";
    case ErrorCode::InternalSolverFailure: return "InternalSolverFailure";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InfeasibleLayout: return "InfeasibleLayout";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NaNDetected: return "NaNDetected";
    case ErrorCode::SteppingTerminatedEpisode: return "SteppingTerminatedEpisode";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "UnknownError";
}

}  // namespace ogmp
