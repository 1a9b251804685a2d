#pragma once

#include <stdexcept>
#include <string>

namespace quenchwr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad scenario, bad netlist,
/// negative material coefficient, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A time or grid lies outside the span of a waveform.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// A numerical solve failed (singular pivot, NaN state, stagnating iteration).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace quenchwr
