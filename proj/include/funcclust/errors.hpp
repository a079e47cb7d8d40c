#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace funcclust {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An evaluation point lies outside the basis domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (basis dimension, mixture sizes, generator setup, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or non-finite input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations for the requested estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A component covariance could not be factorized even after ridge repair.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// A mixture component's total responsibility collapsed to numerical zero.
class StarvedComponentError : public Error {
 public:
  using Error::Error;
};

/// Every EM restart failed; carries one diagnostic line per restart.
class FitFailedError : public Error {
 public:
  FitFailedError(const std::string& what, std::vector<std::string> diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// The estimated slope of the log-likelihood against the penalty was not positive.
class SlopeEstimationError : public Error {
 public:
  using Error::Error;
};

/// Every mixture order in a sweep failed to fit.
class SweepFailedError : public Error {
 public:
  using Error::Error;
};

}  // namespace funcclust
