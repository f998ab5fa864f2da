#pragma once

#include <stdexcept>
#include <string>

namespace langlab {

// Bad experiment configuration (missing file, unknown key, ...). CLI exit 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data. CLI exit 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values produced during training. CLI exit 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace langlab
