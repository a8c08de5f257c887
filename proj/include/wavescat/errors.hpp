#pragma once

#include <stdexcept>
#include <string>

namespace wavescat {

// Error taxonomy shared by the library and the CLI.  Each class maps to a
// distinct process exit code (see tools/).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedFormatError : IoError {
  using IoError::IoError;
};

struct MalformedFileError : IoError {
  using IoError::IoError;
};

// Raised when a numeric stage produces NaN or diverges; carries the stage
// name so a failing synthesis run can be located.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_name(stage) {}
  std::string stage_name;
};

}  // namespace wavescat
