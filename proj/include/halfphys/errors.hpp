#pragma once

#include <stdexcept>
#include <string>

namespace hp {

// Thrown for bad user input: malformed files, invalid parameter values,
// inconsistent scenario wiring. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a simulation cannot continue (non-finite state, impossible
// request at runtime). CLI maps this to exit code 3.
struct SimError : std::runtime_error {
  explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for filesystem trouble: unreadable/unwritable paths, truncated
// streams. CLI maps this to exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hp
