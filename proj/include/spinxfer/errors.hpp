#pragma once

#include <stdexcept>
#include <string>

namespace spinxfer {

// Bad inputs: maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric failures: maps to CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularSystemError : NumericError {
    using NumericError::NumericError;
};

struct IntegrationError : NumericError {
    using NumericError::NumericError;
};

struct UnsupportedConfiguration : ValidationError {
    using ValidationError::ValidationError;
};

}  // namespace spinxfer
