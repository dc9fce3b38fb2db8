#pragma once

#include <stdexcept>
#include <string>

namespace esnode {

enum class ErrorCode {
  NonFinite,
  DimensionMismatch,
  LengthMismatch,
  DegenerateMatrix,
  SingularSystem,
  TrialDiverged,
  Config,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code drives the C API status
/// and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of the numerics rather than of the inputs.
  bool numerical() const noexcept {
    return code_ == ErrorCode::NonFinite || code_ == ErrorCode::SingularSystem ||
           code_ == ErrorCode::TrialDiverged;
  }

 private:
  ErrorCode code_;
};

/// Re-throws `e` with a phase tag prepended to its message.
[[noreturn]] inline void rethrow_tagged(const Error& e, const std::string& phase) {
  throw Error(e.code(), "[" + phase + "] " + e.what());
}

}  // namespace esnode
