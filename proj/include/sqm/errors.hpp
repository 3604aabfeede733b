#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqm {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The computation ran but produced an unusable numerical result.
class NumericalError : public Error {
public:
    using Error::Error;
    virtual std::string kind() const { return "NumericalError"; }
};

class NonFinitePath : public NumericalError {
public:
    NonFinitePath(std::size_t path_index, std::size_t step, double value)
        : NumericalError("path " + std::to_string(path_index) + " left the finite domain at step " +
                         std::to_string(step) + " (x=" + std::to_string(value) + ")"),
          path_index_(path_index), step_(step) {}

    std::string kind() const override { return "NonFinitePath"; }
    std::size_t path_index() const { return path_index_; }
    std::size_t step() const { return step_; }

private:
    std::size_t path_index_;
    std::size_t step_;
};

class MassDriftError : public NumericalError {
public:
    MassDriftError(double time, double mass)
        : NumericalError("probability mass drifted to " + std::to_string(mass) + " at t=" +
                         std::to_string(time)),
          time_(time), mass_(mass) {}

    std::string kind() const override { return "MassDriftError"; }
    double time() const { return time_; }
    double mass() const { return mass_; }

private:
    double time_;
    double mass_;
};

class InstabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
    std::string kind() const override { return "InstabilityError"; }
};

#define SQM_DECLARE_ARGUMENT_ERROR(Name)      \
    class Name : public InvalidArgument {     \
    public:                                   \
        using InvalidArgument::InvalidArgument; \
    }

SQM_DECLARE_ARGUMENT_ERROR(InsufficientPaths);
SQM_DECLARE_ARGUMENT_ERROR(DegeneratePath);
SQM_DECLARE_ARGUMENT_ERROR(DerivativeUnavailable);
SQM_DECLARE_ARGUMENT_ERROR(OrderOutOfRange);
SQM_DECLARE_ARGUMENT_ERROR(SeriesDivergence);
SQM_DECLARE_ARGUMENT_ERROR(AnchorTooCloseToBoundary);
SQM_DECLARE_ARGUMENT_ERROR(InsufficientSnapshots);
SQM_DECLARE_ARGUMENT_ERROR(PathTooShort);
SQM_DECLARE_ARGUMENT_ERROR(NonPositiveDensity);
SQM_DECLARE_ARGUMENT_ERROR(TimeRegression);
SQM_DECLARE_ARGUMENT_ERROR(GateTooNarrow);
SQM_DECLARE_ARGUMENT_ERROR(ConfigError);

#undef SQM_DECLARE_ARGUMENT_ERROR

}  // namespace sqm
