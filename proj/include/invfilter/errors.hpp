#pragma once

#include <stdexcept>
#include <string>

namespace invfilter {

/// Raised when vector or matrix sizes do not match the group or output map.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the logarithm when a rotation angle reaches the cut at pi.
class BranchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown: singular innovation matrix, non-PSD covariance, ...
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario, experiment configuration or CLI input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace invfilter
