#pragma once

#include <optional>
#include <string_view>

#include "gridbench/types.hpp"

namespace gridbench {

enum class CovarianceMethod { sample, ledoit_wolf, graphical_lasso };

std::string_view to_string(CovarianceMethod method);
CovarianceMethod covariance_method_from_string(std::string_view name);

struct CovarianceEstimate {
  Matrix W;
  CovarianceMethod method = CovarianceMethod::sample;
  /// Shrinkage intensity (Ledoit-Wolf) or L1 penalty (graphical lasso).
  double regularization = 0.0;
  /// Multiple of the identity added to restore positive definiteness.
  double jitter = 0.0;
  /// Sparse precision estimate (graphical lasso only).
  std::optional<Matrix> precision;
};

/// Maximum-likelihood covariance (divides by the sample count) of the
/// column-centred samples.
Matrix sample_covariance(const Matrix& samples);

/// Adds 1e-8 * trace / n * I, growing tenfold until the smallest eigenvalue
/// is positive. Returns the amount added (0 when W was already definite) and
/// symmetrizes W in any case.
double make_positive_definite(Matrix& W);

/// Shrinks the sample covariance toward mu * I with the closed-form
/// intensity of Ledoit and Wolf (2004).
CovarianceEstimate estimate_ledoit_wolf(const Matrix& samples);

struct GraphicalLassoOptions {
  /// Negative selects 0.01 * mean |off-diagonal sample covariance|.
  double lambda = -1.0;
  int max_sweeps = 200;
  double tolerance = 1e-8;
  int max_inner = 1000;
};

/// L1-penalized precision estimate by block coordinate descent; the diagonal
/// is not penalized. Throws NumericError with the duality gap when the
/// sweeps do not converge.
CovarianceEstimate estimate_graphical_lasso(const Matrix& samples, const GraphicalLassoOptions& options = {});

CovarianceEstimate estimate_covariance(const Matrix& samples, CovarianceMethod method,
                                       const GraphicalLassoOptions& glasso = {});

}  // namespace gridbench
