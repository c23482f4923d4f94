// errors.hpp - exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace spinbath {

// Invalid or inconsistent user-facing configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during a computation (divergence, singular map, ...).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace spinbath
