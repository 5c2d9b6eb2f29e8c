#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gridbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Base class of every error raised by the library. The CLI maps the
/// concrete subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration / arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a precondition (too short, gaps, unknown column...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (non-convergence, singular system...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridbench
