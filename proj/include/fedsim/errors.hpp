#ifndef FEDSIM_ERRORS_HPP
#define FEDSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fedsim {

// Invalid experiment configuration or search-space description.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Discrete search grid exceeds the configured cardinality cap (or overflows).
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or parameters during training.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Reward cannot be computed (non-positive or non-finite validation loss).
class RewardError : public std::runtime_error {
 public:
  explicit RewardError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedsim

#endif
