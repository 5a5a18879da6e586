#pragma once

#include <stdexcept>
#include <string>

namespace hcace {

// Exit-code categories used by the command line tool: 1 usage, 2 data, 3 numeric.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computation cannot produce a meaningful number (singular
// covariance, zero estimated compliance in a decomposition leaf, ...).
struct DegeneracyError : std::runtime_error {
  explicit DegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hcace
