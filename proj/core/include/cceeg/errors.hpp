#pragma once

#include <stdexcept>
#include <string>

namespace cceeg {

// Error taxonomy mirrors the CLI exit codes: config errors exit 2, numeric
// failures exit 3, I/O failures exit 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cceeg
