#pragma once

#include <stdexcept>
#include <string>

namespace grate {

enum class ErrorKind {
  InvalidArgument,  // bad sizes, parameters or ranges
  Parse,            // malformed input text
  Validation,       // well-formed input violating a model invariant
  Numeric,          // solver failure or degenerate fit
  Internal,         // a computed quantity failed its own self-check
  Io,
};

/// Single exception type for the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with "<context>: ".
  Error with_context(const std::string& context) const {
    return Error(kind_, context + ": " + what());
  }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace grate
