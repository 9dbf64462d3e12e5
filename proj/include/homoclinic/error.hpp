#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homoclinic {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad problem id, malformed expression, invalid parameter set.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Command-line or config-file misuse. Maps to exit status 2.
class UsageError : public Error {
public:
  using Error::Error;
};

/// A user function returned a non-finite value.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string& what, double t, std::vector<double> x)
      : Error(what), t_(t), x_(std::move(x)) {}

  double t() const noexcept { return t_; }
  const std::vector<double>& x() const noexcept { return x_; }

private:
  double t_;
  std::vector<double> x_;
};

/// Argument outside the mathematical domain of an operation (k < 1, bad margin, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Requested window or restriction does not fit the source grid.
class WindowError : public Error {
public:
  using Error::Error;
};

/// No scaling of the bump reached negative action below the cap.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Newton iterate blew up.
class DivergenceError : public Error {
public:
  using Error::Error;
};

}  // namespace homoclinic
