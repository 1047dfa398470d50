#include "common.hpp"

namespace cdmpsl {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::UnsupportedProblem: return "unsupported problem";
    case ErrorCode::InvalidDimension: return "invalid dimension";
    case ErrorCode::BoundsViolation: return "bounds violation";
    case ErrorCode::InvalidData: return "invalid data";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::InvalidState: return "invalid state";
    case ErrorCode::UnsupportedDimension: return "unsupported dimension";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Alignment: return "alignment error";
    case ErrorCode::RunFailed: return "run failed";
  }
  return "unknown error";
}

}  // namespace cdmpsl
