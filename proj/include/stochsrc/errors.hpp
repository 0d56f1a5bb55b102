#pragma once

#include <stdexcept>
#include <string>

namespace stochsrc {

/// Invalid input or configuration. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside a function's mathematical domain (z = 0, pole of Gamma, ...).
class DomainError : public ValidationError {
public:
    explicit DomainError(const std::string& what) : ValidationError(what) {}
};

/// Requested evaluation lies outside the region where accuracy has been validated,
/// or a numerical procedure broke down. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace stochsrc
