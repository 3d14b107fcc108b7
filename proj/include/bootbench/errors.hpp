#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bootbench {

// Invalid experiment or module configuration (bad layer sizes, bad ranges,
// indivisible horizons, malformed config files).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an operation precondition (dimension mismatch, stepping a
// terminated environment, empty inputs).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/array shape disagreement.
class ShapeError : public UsageError {
 public:
  explicit ShapeError(const std::string& msg) : UsageError(msg) {}
};

// Non-finite gradient or loss during optimization. Carries the index of the
// offending layer.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, std::size_t layer)
      : std::runtime_error(msg), layer_index(layer) {}
  std::size_t layer_index;
};

// Model rollout produced a non-finite state. Carries the 1-based index of the
// prediction step that diverged.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(const std::string& msg, std::size_t step)
      : std::runtime_error(msg), step_index(step) {}
  std::size_t step_index;
};

// Reporting over an incomplete result grid.
class ReportError : public std::runtime_error {
 public:
  explicit ReportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bootbench
