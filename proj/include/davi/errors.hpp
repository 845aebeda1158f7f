#pragma once

#include <stdexcept>
#include <string>

namespace davi {

/// Bad arguments from the caller: out-of-range indices, inconsistent sizes,
/// invalid parameters.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A theoretical precondition does not hold (e.g. a state or state-action
/// pair that can never be sampled).
class ContractViolation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative evaluation hit its sweep cap before reaching the requested
/// residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (final residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace davi
