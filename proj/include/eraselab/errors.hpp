#pragma once

#include <stdexcept>
#include <string>

namespace eraselab {

// Error categories surfaced by the library. The CLI maps them to exit codes:
// configuration problems -> 2, numeric failures -> 3, I/O and format -> 4.
enum class ErrorKind {
  Parameter,
  Input,
  Usage,
  Lookup,
  Numeric,
  Training,
  Sampling,
  Config,
  Format,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace eraselab
