#pragma once

#include <stdexcept>
#include <string>

namespace limoco {

// Invalid configuration or command-line usage (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (CLI exit code 2).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// IMU stream does not cover the requested interval.
struct CoverageError : DataError {
  explicit CoverageError(const std::string& what) : DataError(what) {}
};

// Too few residuals to constrain the 11-variable window state.
struct UnderConstrainedError : std::runtime_error {
  explicit UnderConstrainedError(const std::string& what) : std::runtime_error(what) {}
};

// No temporal self-overlap regions found for the double-wall measurement.
struct NoOverlapError : std::runtime_error {
  explicit NoOverlapError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace limoco
