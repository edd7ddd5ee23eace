#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tarma {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ErrorKind {
  invalid_spec,
  unsupported_spec,
  invalid_argument,
  too_short,
  degenerate_input,
  untestable_series,
  missing_table,
  parse,
  invariant_violation,
  no_admissible_threshold,
  internal,
};

const char* to_string(ErrorKind kind);

/// Exception carrying a classification used by the CLI to pick exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

/// Bound on |theta| used by every optimizer in the library.
inline constexpr double kThetaBound = 0.999;

}  // namespace tarma
