#include "nsslice/error.hpp"

namespace nsslice {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::degenerate_normal: return "degenerate-normal";
    case ErrorCode::chart_overflow: return "chart-overflow";
    case ErrorCode::malformed_header: return "malformed-header";
    case ErrorCode::truncated_payload: return "truncated-payload";
    case ErrorCode::non_finite_sample: return "non-finite-sample";
    case ErrorCode::io_failure: return "io-failure";
    case ErrorCode::empty_slice: return "empty-slice";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::bound_violation: return "bound-violation";
    case ErrorCode::inconsistency: return "inconsistency";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::config_error: return 2;
    case ErrorCode::malformed_header:
    case ErrorCode::truncated_payload:
    case ErrorCode::non_finite_sample:
    case ErrorCode::io_failure: return 3;
    case ErrorCode::degenerate_normal:
    case ErrorCode::chart_overflow:
    case ErrorCode::empty_slice:
    case ErrorCode::out_of_domain: return 4;
    case ErrorCode::blow_up: return 5;
    case ErrorCode::bound_violation:
    case ErrorCode::inconsistency: return 6;
  }
  return 1;
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace nsslice
