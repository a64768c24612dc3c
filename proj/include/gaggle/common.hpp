#pragma once

#include <stdexcept>
#include <string>

namespace gaggle {

// Violation of an operation precondition (caller bug).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Invalid configuration value (user/config bug).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training aborted because the loss became non-finite or exploded.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

inline void expects(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace gaggle
