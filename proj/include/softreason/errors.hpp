#ifndef SOFTREASON_ERRORS_HPP
#define SOFTREASON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace softreason {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Observations contradict each other (e.g. one point, two values, no noise).
class InconsistentData : public Error {
public:
    using Error::Error;
};

/// Gram factorization failed even after the largest jitter.
class NumericalConditioning : public Error {
public:
    using Error::Error;
};

/// The generation backend could not be reached or answered with a non-2xx status.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The backend cannot provide a required capability (e.g. embedding access).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// A generation produced no tokens where at least one was required.
class EmptyOutputError : public Error {
public:
    using Error::Error;
};

/// Input data (datasets, configs, run logs) failed validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractViolation(message);
    }
}

} // namespace detail

} // namespace softreason

#endif // SOFTREASON_ERRORS_HPP
