#pragma once

#include <stdexcept>
#include <string>

namespace irl {

/// Violated MDP invariant (transition rows, initial distribution, discount).
class MdpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad user configuration (scenario or algorithm settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/inf iterates or a singular system.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fixed-point iteration hit its iteration cap.
class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace irl
