#pragma once

#include <stdexcept>
#include <string>

namespace omlr {

/// Invalid model or experiment configuration (bad probabilities, non-SPD covariances, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed call-site input, typically a dimension mismatch.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy result
/// (singular Gram matrix, loss of positive definiteness, quadrature failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace omlr
