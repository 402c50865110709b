#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace mandet {

/// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed values, non-SPD covariance, bad ranges.
class InputError : public Error {
public:
    using Error::Error;
};

/// A state or element set outside the valid domain of a conversion.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string element)
        : Error(what), element_(std::move(element)) {}

    const std::string& element() const noexcept { return element_; }

private:
    std::string element_;
};

/// Numerical integration gave up. Carries the last accepted state.
class PropagationError : public Error {
public:
    PropagationError(const std::string& what, double last_time,
                     const std::array<double, 6>& last_state, int segment = -1)
        : Error(what), last_time_(last_time), last_state_(last_state), segment_(segment) {}

    double last_time() const noexcept { return last_time_; }
    const std::array<double, 6>& last_state() const noexcept { return last_state_; }
    /// Index of the reference segment being propagated, or -1 outside of a grid.
    int segment() const noexcept { return segment_; }

private:
    double last_time_;
    std::array<double, 6> last_state_;
    int segment_;
};

}  // namespace mandet
