#include "tarma/common.hpp"

namespace tarma {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_spec: return "invalid-spec";
    case ErrorKind::unsupported_spec: return "unsupported-spec";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::too_short: return "too-short";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::untestable_series: return "untestable-series";
    case ErrorKind::missing_table: return "missing-table";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::no_admissible_threshold: return "no-admissible-threshold";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace tarma
