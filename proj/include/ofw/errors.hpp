#pragma once

#include <stdexcept>
#include <string>

namespace ofw {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scalar argument is outside its domain (n = 0, empty vector, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Shapes of iterates, gradients, atoms or constraint sets disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation would break a structural invariant (feasibility, weights).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A gradient was requested from an aggregator that has seen no samples.
class NoDataError : public Error {
 public:
  using Error::Error;
};

/// The requested combination is not supported (O-AW on a trace-norm ball).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ofw
