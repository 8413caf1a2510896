#pragma once

#include <stdexcept>
#include <string>

namespace specflow {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed inputs: bad truncation specs, shape mismatches, missing fields.
struct ValidationError : Error {
  using Error::Error;
};

// A split threshold landed on (or too close to) an eigenvalue.
struct ThresholdOnSpectrumError : Error {
  ThresholdOnSpectrumError(const std::string& msg, double eigenvalue)
      : Error(msg), offending_eigenvalue(eigenvalue) {}
  double offending_eigenvalue;
};

// Perturbation norm violates the spectral-gap precondition.
struct GapViolationError : Error {
  using Error::Error;
};

// Spectral flow endpoint has an eigenvalue inside the kernel window.
struct DegenerateEndpointError : Error {
  using Error::Error;
};

// Fixed-point iteration failed to reach tolerance within max_iter.
struct NonContractionError : Error {
  NonContractionError(const std::string& msg, double last_ratio)
      : Error(msg), last_update_ratio(last_ratio) {}
  double last_update_ratio;
};

// Pointwise nonlinearity produced a non-finite value, or an inner
// quadrature failed to converge.
struct EvaluationError : Error {
  using Error::Error;
};

// A solve method was asked to run while a required hypothesis fails.
struct HypothesisRefusalError : Error {
  HypothesisRefusalError(const std::string& msg, std::string condition_)
      : Error(msg), condition(std::move(condition_)) {}
  std::string condition;
};

// Generic numerical breakdown (singular systems, diverging paths).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace specflow
