#pragma once

#include <stdexcept>
#include <string>

namespace hindpaint {

// Bad argument at an API boundary (shape mismatch, zero dimension, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An episode whose goal equals its start state; reward is undefined.
class DegenerateEpisode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every collected episode was degenerate, so no supervision exists.
class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a state-machine contract, e.g. stepping a finished episode.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN or infinity where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stored hash or architecture descriptor does not match the content.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hindpaint
