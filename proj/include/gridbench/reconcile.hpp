#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "gridbench/hierarchy.hpp"
#include "gridbench/quantiles.hpp"

namespace gridbench {

enum class ReconcileMethod { ols, mint, bayes };

std::string_view to_string(ReconcileMethod method);
ReconcileMethod reconcile_method_from_string(std::string_view name);

/// Linear reconciliation y_b = G y_hat with G S = I, so that the full
/// reconciled vector S G y_hat is coherent and coherent inputs are fixed.
struct ReconciliationOperator {
  ReconcileMethod method = ReconcileMethod::ols;
  Matrix G;  // n_bottom x n
  Matrix S;  // n x n_bottom
  /// Posterior covariance of the bottom series (Bayes only).
  std::optional<Matrix> posterior_covariance;

  Matrix projection() const { return S * G; }
};

/// Base forecasts, one row per forecast instant, columns in hierarchy order.
struct BaseForecastSet {
  Matrix forecasts;
};

struct ReconciledForecastSet {
  Matrix bottom;  // instants x n_bottom
  Matrix all;     // instants x n, all = bottom * S'
};

ReconciliationOperator ols_operator(const Hierarchy& hierarchy);

/// Generalized least squares with base-error covariance W. An ill-conditioned
/// S' W^-1 S is jittered with a warning.
ReconciliationOperator mint_operator(const Hierarchy& hierarchy, const Matrix& W);

/// Gaussian conditioning of the bottom base forecasts (prior covariance: the
/// bottom block of W) on the upper base forecasts (noise: the upper block).
/// The upper/bottom cross-covariance of W is used only when requested.
ReconciliationOperator bayes_operator(const Hierarchy& hierarchy, const Matrix& W,
                                      bool use_cross_covariance = false);

ReconciledForecastSet apply(const ReconciliationOperator& op, const BaseForecastSet& base);

ReconciledForecastSet reconcile_ols(const BaseForecastSet& base, const Hierarchy& hierarchy);
ReconciledForecastSet reconcile_mint(const BaseForecastSet& base, const Hierarchy& hierarchy, const Matrix& W);
ReconciledForecastSet reconcile_bayes(const BaseForecastSet& base, const Hierarchy& hierarchy, const Matrix& W,
                                      bool use_cross_covariance = false);

/// Residuals of the reconciled forecasts given base residuals (rows =
/// samples, columns in hierarchy order): e_tilde = S G e.
Matrix reconcile_residuals(const ReconciliationOperator& op, const Matrix& residuals);

/// Empirical fan around a reconciled point forecast from a bank of
/// reconciled residuals.
Matrix reconcile_quantiles(const ErrorBank& reconciled_bank, const QuantileGrid& grid,
                           const Vector& reconciled_point, int step_of_day);

/// Writes G and S G as CSV with series names as headers.
void write_operator_csv(const ReconciliationOperator& op, const std::vector<std::string>& names,
                        const std::filesystem::path& directory);

}  // namespace gridbench
