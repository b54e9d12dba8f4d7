#pragma once

#include <stdexcept>
#include <string>

namespace bofprior {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied value.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Malformed input file (CSV, JSON). Carries a location in the message.
class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Basis parameters outside the family's domain (log of non-positive, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Regression positions do not span a line.
class SingularDesignError : public Error {
public:
  using Error::Error;
};

/// Model and prior configuration disagree, or a required statistic is absent.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace bofprior
