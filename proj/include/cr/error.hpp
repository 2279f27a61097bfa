#pragma once

#include <stdexcept>
#include <string>

namespace cr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are inconsistent (matrix sizes, tensor factors, channel dims).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An input violates a documented precondition (not Hermitian, not PSD, odd
/// parity region, algebra not contained in another, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}
inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}
}  // namespace detail

}  // namespace cr
