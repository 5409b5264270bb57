#pragma once

#include <stdexcept>
#include <string>

namespace skewsim {

/// Base of every error raised by the library. The CLI maps all of these to
/// exit status 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad intervals, non-positive bandwidths, mismatched grids.
class InputError : public Error {
public:
    using Error::Error;
};

/// Query outside the tabulated domain or image of a transform.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A mathematical hypothesis required by an operation does not hold.
class ConditionError : public Error {
public:
    ConditionError(std::string condition, double witness, const std::string& what)
        : Error(what), condition_(std::move(condition)), witness_(witness) {}

    const std::string& condition() const noexcept { return condition_; }
    double witness() const noexcept { return witness_; }

private:
    std::string condition_;
    double witness_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

}  // namespace skewsim
