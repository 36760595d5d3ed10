#pragma once

#include <stdexcept>
#include <string>

namespace cdslice {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or configuration shapes that do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Out-of-range hyperparameter or spec field.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Degenerate or invalid point cloud.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A slice holds more points than the configured capacity.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Malformed binary file; the message carries the byte offset.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Checkpoint or cache written for a different configuration.
class ConfigMismatchError : public Error {
public:
    using Error::Error;
};

/// Bad or missing user input (empty splits, unreadable files, bad CSV).
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace cdslice
