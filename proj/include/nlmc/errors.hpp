#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlmc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input point (wrong dimension, non-finite coordinate).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Operation undefined at the given state, e.g. a zero-density point.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation requires state the object does not have (empty measure).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Stored invariant no longer holds (stale supremum of log pi).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Brute-force enumeration or search would be infeasible.
class SizeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Bad or missing configuration entry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Configuration value outside its admissible range.
class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite value produced during a computation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, std::size_t index = npos)
      : Error(what), index_(index) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Iteration or element index where the failure was detected, if known.
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace nlmc
