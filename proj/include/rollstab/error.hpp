#pragma once

#include <stdexcept>
#include <string>

namespace rollstab {

/// Base of every error the toolkit raises on purpose.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed, missing or mismatched input. The CLI maps it to exit code 2.
class InputError : public Error {
  public:
    using Error::Error;
};

/// Input is well-formed but a detector cannot run on it (exit code 3).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

// RGF container failures. Each is distinguishable so callers can report them precisely.
class FormatError : public InputError {
  public:
    using InputError::InputError;
};

class DimensionError : public InputError {
  public:
    using InputError::InputError;
};

class TruncatedError : public InputError {
  public:
    using InputError::InputError;
};

/// A wavelength band has no wavenumbers on the given grid.
class BandUnresolved : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

/// A model adapter failed while stepping a rollout.
class AdapterError : public Error {
  public:
    using Error::Error;
};

}  // namespace rollstab
