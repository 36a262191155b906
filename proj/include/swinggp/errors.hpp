#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swinggp {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Bad or incomplete run configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

class NoEquilibrium : public Error {
public:
  using Error::Error;
};

/// A state component became non-finite during integration.
class IntegrationDiverged : public Error {
public:
  IntegrationDiverged(std::size_t realization, std::size_t step)
      : Error("integration diverged at step " + std::to_string(step) + " of realization " +
              std::to_string(realization)),
        realization_(realization),
        step_(step) {}

  [[nodiscard]] std::size_t realization() const noexcept { return realization_; }
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
  std::size_t realization_;
  std::size_t step_;
};

class IndexOutOfRange : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class FormatVersionMismatch : public Error {
public:
  using Error::Error;
};

class ChecksumMismatch : public Error {
public:
  using Error::Error;
};

/// Covariance factorization failed even at the largest nugget.
class SingularPrior : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class FitFailed : public Error {
public:
  using Error::Error;
};

class AlignmentError : public Error {
public:
  using Error::Error;
};

/// The ground-truth realization would be part of the prior ensemble.
class TruthLeakage : public Error {
public:
  using Error::Error;
};

}  // namespace swinggp
