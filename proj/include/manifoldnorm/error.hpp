#pragma once

#include <stdexcept>
#include <string>

namespace manifoldnorm {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: wrong shape, manifold mismatch, point off the manifold,
/// malformed file or config. Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input was well-formed but the computation cannot proceed: cut locus,
/// branch violation, non-convergence, divergence. Maps to CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Binary tensor/dataset format problems (magic, version, checksum).
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

namespace detail {

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw ValidationError(what);
}

[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw NumericalError(what);
}

}  // namespace detail
}  // namespace manifoldnorm
