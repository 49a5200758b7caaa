#pragma once

#include <stdexcept>
#include <string>

namespace quant {

// Process exit codes used by the CLI. Library code throws; the CLI maps.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    data = 3,
    size_guard = 4,
};

// Invalid flag combinations, unsupported kernel/target pairings.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (files, shapes, non-finite values).
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exact-solve instance exceeds the configured enumeration guard.
class SizeGuardError : public std::runtime_error {
  public:
    SizeGuardError(const std::string& msg, double enumeration_count)
        : std::runtime_error(msg), enumeration_count(enumeration_count) {}
    double enumeration_count;
};

}  // namespace quant
