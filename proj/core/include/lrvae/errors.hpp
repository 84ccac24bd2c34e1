#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace lrvae {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value or dataset invariant is violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A class index is outside its vocabulary.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// An API precondition was broken by the caller (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN or infinity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string format_shape(std::span<const std::size_t> shape);

}  // namespace lrvae
