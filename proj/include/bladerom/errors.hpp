#pragma once

#include <stdexcept>
#include <string>

namespace bladerom {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File missing or unreadable/unwritable. The message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// File content does not follow the declared layout (headers, column counts).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Values parse but violate a domain invariant (e.g. azimuth out of range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A caller passed arguments outside an operation's preconditions.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Ill-conditioned or otherwise numerically unusable input.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Operation invoked on an object that is not ready (e.g. an empty model).
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace bladerom
