#pragma once

#include <stdexcept>
#include <string>

namespace thinobs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument (range, shape, power of two, ...) failed.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A ball, window or point does not fit the grid box, or a radius is below
/// the reliable minimum.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// NaN detected, vanishing boundary mass, or another numerical breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed, or a file is malformed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace thinobs
