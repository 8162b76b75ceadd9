#pragma once

#include <stdexcept>
#include <string>

namespace cyldet {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, NumericError -> 4, SpecMismatchError -> 5.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpecMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File-format failure with a machine-checkable reason.
struct FormatError : DataError {
  enum class Kind { BadMagic, BadVersion, Truncated, BadValue };
  Kind kind;
  FormatError(Kind k, const std::string& msg) : DataError(msg), kind(k) {}
};

}  // namespace cyldet
