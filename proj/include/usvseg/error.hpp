#pragma once

#include <stdexcept>
#include <string>

namespace usvseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, truncated, or malformed files.
class IoError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The EM hit a state it cannot continue from (zero normalizers, non-PD covariance).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace usvseg
