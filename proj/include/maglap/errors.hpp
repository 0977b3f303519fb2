#pragma once

#include <stdexcept>
#include <string>

namespace maglap {

// Invalid experiment or operator configuration (bad flux, bad grid, bad keys).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated a data-flow precondition (incomplete slice, out-of-range N, ...).
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical breakdown that survived all retries (factorization failure, stalled solver).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (mask files, non-convex tables).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace maglap
