#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meshfree {

enum class ErrorCode {
  InvalidArgument,
  DegenerateGeometry,
  IllConditionedStencil,
  SolveFailure,
  NumericalFailure,
  IncompatibleCheckpoint,
  IoError,
  UnstableRun,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::IllConditionedStencil: return "ill-conditioned-stencil";
    case ErrorCode::SolveFailure: return "solve-failure";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::IncompatibleCheckpoint: return "incompatible-checkpoint";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::UnstableRun: return "unstable-run";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Process exit status used by the command-line tool.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::IncompatibleCheckpoint:
      return 1;
    case ErrorCode::IoError:
      return 3;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace meshfree
