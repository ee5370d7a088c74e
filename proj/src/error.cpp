#include "grate/error.hpp"

namespace grate {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Internal: return "internal inconsistency";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace grate
