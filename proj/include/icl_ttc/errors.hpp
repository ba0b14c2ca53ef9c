#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace icl_ttc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameters for a task, sampler or experiment.
struct ConfigError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

// Requested enumeration exceeds the supported state-space size.
struct CapacityError : Error {
    using Error::Error;
};

// Valid inputs combined in an unsupported way, e.g. majority vote on continuous weights.
struct UsageError : Error {
    using Error::Error;
};

// Argument outside the region where a formula is defined.
struct DomainError : Error {
    using Error::Error;
};

// Least-squares design matrix without full column rank.
struct RankError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

// Model parameters cannot be recovered from the supplied data.
struct NonIdentifiableError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : ConfigError {
    ParseError(std::size_t line, std::string key, const std::string& what)
        : ConfigError("line " + std::to_string(line) + (key.empty() ? "" : " (" + key + ")") +
                      ": " + what),
          line(line),
          key(std::move(key)) {}

    std::size_t line;
    std::string key;
};

}  // namespace icl_ttc
