#pragma once

#include <stdexcept>

namespace pgkb {

// Caller mistakes: bad dimensions, incompatible options, malformed files.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The math went bad: loss of positive definiteness, non-finite values,
// rank-condition violations.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pgkb
