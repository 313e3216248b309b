#pragma once

#include <stdexcept>
#include <string>

namespace regcl {

// Error categories map 1:1 onto the CLI exit codes (2/3/4).

/// Bad configuration: unknown keys, out-of-range values, incompatible dimensions.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input data: parse failures, invalid indices, empty datasets.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure: non-finite gradients, violated exact identities.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace regcl
