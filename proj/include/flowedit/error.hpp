#pragma once

#include <stdexcept>
#include <string>

namespace flowedit {

enum class ErrorCode {
  invalid_argument = 1,
  shape_mismatch,
  non_finite,
  degenerate,
  io,
  version_mismatch,
  protocol,
  out_of_range,
  timeout,
  connection,
  config,
};

// Every failure inside the library surfaces as an Error carrying a code; the C
// API maps codes one-to-one onto fe_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace flowedit
