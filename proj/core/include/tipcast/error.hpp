#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tipcast {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed field expression. `offset()` is the byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Unbound parameter, invalid primitive parameters, or a domain error
/// (division by zero, log of a nonpositive number, ...) during evaluation.
class FieldError : public Error {
 public:
  using Error::Error;
};

/// The integrator could not evaluate the field at an accepted point.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

enum class LimitErrorKind {
  NoBracket,
  SeedEscaped,
  NoConvergence,
  SeparationFailure,
  WrongStabilitySign,
  NonHyperbolic,
  ConcavityViolation,
};

const char* to_string(LimitErrorKind kind) noexcept;

/// Failure to certify the hyperbolic structure of a limit equation.
class LimitError : public Error {
 public:
  LimitError(LimitErrorKind kind, const std::string& what, double detail = 0.0)
      : Error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        detail_(detail),
        reason_(what) {}
  LimitErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& reason() const noexcept { return reason_; }
  /// Kind-specific number: final gap for NoConvergence, escape time for
  /// SeedEscaped, minimal gap for SeparationFailure, exponent otherwise.
  double detail() const noexcept { return detail_; }

 private:
  LimitErrorKind kind_;
  double detail_;
  std::string reason_;
};

/// Hypothesis violations detected while classifying a transition equation.
class ClassifyError : public Error {
 public:
  using Error::Error;
};

class BisectError : public Error {
 public:
  using Error::Error;
};

/// Scenario or run configuration rejected. `path()` is a JSON-pointer-like
/// location of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tipcast
