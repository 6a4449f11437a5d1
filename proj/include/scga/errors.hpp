#pragma once

#include <stdexcept>
#include <string>

namespace scga {

// Error taxonomy maps onto CLI exit codes: ConfigError/usage -> 1,
// DataError -> 2, NumericError -> 3. Contract violations (bad shapes,
// out-of-range slices, empty sequences) use std::invalid_argument.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scga
