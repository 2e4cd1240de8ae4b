#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parcmi {

enum class ErrorKind {
  Domain,             // argument outside a function's domain, or NaN input
  Dimension,          // covariate vector / coefficient length mismatch
  DeepTail,           // S(w) below the tail threshold
  NonexistentMean,    // e.g. log-logistic with shape <= 1
  EmptyIntervalMass,  // S(l) - S(u) below the tail threshold
  Unsupported,        // strategy not available for a family
  Degenerate,         // unidentified likelihood, -inf log-likelihood
  Singular,           // singular information or design matrix
  Convergence,        // optimizer / quadrature did not converge
  Data,               // malformed input data
  Config              // malformed configuration
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
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

}  // namespace parcmi
