#pragma once

#include <stdexcept>
#include <string>

namespace driftwatch {

/// Bad data handed to an operation: non-finite values, width or dimension
/// mismatches, empty samples, malformed input files.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// A configuration that violates an invariant (p_null == p_alt, window < 2, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace driftwatch
