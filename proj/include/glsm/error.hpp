#pragma once

#include <stdexcept>
#include <string>

namespace glsm {

// Bad parameters, malformed configuration, or violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot be used (wrong shape, out of support, I/O failures).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed: Cholesky beyond jitter, dead Markov chain,
// optimiser or quadrature breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glsm
