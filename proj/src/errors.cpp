#include "eraselab/errors.hpp"

namespace eraselab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::Sampling: return "sampling error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

}  // namespace eraselab
