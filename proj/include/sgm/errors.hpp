#pragma once

#include <stdexcept>
#include <string>

namespace sgm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid parameter values or malformed configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Filesystem failures and unparseable input files.
struct IoError : Error {
  using Error::Error;
};

/// Numeric failure inside an optimization or factorization.
struct SolverError : Error {
  using Error::Error;
};

/// Degenerate geometric input (flat point sets, zero-length means, ...).
struct GeometryError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

}  // namespace sgm
