#pragma once

#include <stdexcept>
#include <string>

namespace csgan {

// Bad user input: missing files, malformed configs, empty corpora.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal contract violation: shape mismatch, id out of range.
struct InvariantError : std::logic_error {
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical failure during training (NaN/Inf loss or gradient).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace csgan
