#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nsslice {

enum class ErrorCode {
  invalid_argument,
  degenerate_normal,
  chart_overflow,
  malformed_header,
  truncated_payload,
  non_finite_sample,
  io_failure,
  empty_slice,
  out_of_domain,
  blow_up,
  bound_violation,
  inconsistency,
  config_error,
};

std::string_view to_string(ErrorCode code);

// Process exit status used by the command-line front end for each error kind.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace nsslice
