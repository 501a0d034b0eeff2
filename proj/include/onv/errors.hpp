#pragma once

#include <stdexcept>
#include <string>

namespace onv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch, malformed arguments.
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// An operation was invoked on an object in the wrong state.
class InvalidState : public Error {
  public:
    using Error::Error;
};

class SolverFailure : public Error {
  public:
    using Error::Error;
};

/// A set that must be non-empty turned out to be empty.
class EmptySet : public Error {
  public:
    using Error::Error;
};

/// The requested computation exceeds a configured capability limit.
class CapabilityError : public Error {
  public:
    using Error::Error;
};

class CannotSplit : public Error {
  public:
    using Error::Error;
};

class EstimationError : public Error {
  public:
    using Error::Error;
};

class InfeasibleDeadline : public Error {
  public:
    using Error::Error;
};

/// Malformed scenario/network file. The message carries the field path.
class ParseError : public Error {
  public:
    using Error::Error;
};

} // namespace onv
