#pragma once

#include <stdexcept>
#include <string>

namespace gridfault {

/// Malformed input, broken contract, or out-of-domain argument.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical stage failure (singular system, diverged training, ...).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridfault
