#pragma once

#include <stdexcept>
#include <string>

namespace qsage {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  Parse,
  Validation,
  UnknownFamily,
  Io,
  Solver,
  NotFound,
  Config,
  Infrastructure,
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Raised by iterative solvers that hit their iteration budget or break down.
class ConvergenceError : public Error {
public:
  explicit ConvergenceError(const std::string &what)
      : Error(ErrorCode::Solver, what) {}
};

} // namespace qsage
