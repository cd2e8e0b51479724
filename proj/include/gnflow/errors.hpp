#pragma once

#include <stdexcept>
#include <string>

namespace gnflow {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or malformed input (bad schedule, even node count, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two discrete objects were built on different grids.
class GridMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A point lies outside the operator's admissible set.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Factorization failure or NaN/Inf contamination.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace gnflow
