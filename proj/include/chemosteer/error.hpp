#pragma once

#include <stdexcept>
#include <string>

namespace chemosteer {

/// Raised when user-facing input (grid, parameters, config) violates a precondition.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical kernel cannot proceed (singular pivot, non-finite data,
/// failed internal validation).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chemosteer
