#pragma once

#include <stdexcept>
#include <string>

namespace dynlab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Network layers do not chain (wrong widths, wrong arity).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A function evaluated to NaN or infinity.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double at) : Error(what), at_(at) {}
  /// Step index or time stamp at which the blow-up was detected.
  double at() const noexcept { return at_; }

 private:
  double at_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for an enumeration-based routine.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration; `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace dynlab
