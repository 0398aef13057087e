#pragma once

#include <stdexcept>
#include <string>

namespace divbar {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DiagonalError : DomainError {
    using DomainError::DomainError;
};

struct NonPositiveVolatility : ParameterError {
    using ParameterError::ParameterError;
};

struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepFailure : IntegrationFailure {
    using IntegrationFailure::IntegrationFailure;
};

struct NotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MembershipViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace divbar
