#pragma once

#include <stdexcept>
#include <string>

namespace tmatch {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A perturbation or model parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A subdomain, point or argument lies outside the domain it must live in.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or missing configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Constants required by a bound formula are zero or inconsistent.
class ConstantsError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (images, non-finite encoder output).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An evaluator returned a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double t, double theta2)
      : Error(what), t_(t), theta2_(theta2) {}

  double time() const { return t_; }
  double theta2() const { return theta2_; }

 private:
  double t_;
  double theta2_;
};

/// The integrator produced a non-finite state or drifted off an invariant.
class StepError : public Error {
 public:
  StepError(const std::string& what, double t) : Error(what), t_(t) {}

  double time() const { return t_; }

 private:
  double t_;
};

}  // namespace tmatch
