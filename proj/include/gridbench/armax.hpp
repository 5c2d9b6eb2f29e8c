#pragma once

#include <span>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

struct ArmaxOrders {
  int ar = 6;
  int ma = 5;
  /// Order of the long autoregression producing the residual proxies.
  int long_ar = 24;
};

/// y_t = sum phi_i y_{t-i} + beta . x_t + eps_t + sum theta_i eps_{t-i}
struct ArmaxModel {
  Vector phi;
  Vector theta;
  Vector beta;

  /// True when every root of the AR polynomial lies outside the unit circle.
  bool stable() const;
};

struct ArmaxEnsemble {
  ArmaxOrders orders;
  std::vector<ArmaxModel> members;
  int dropped = 0;
};

/// Two-stage least squares on one contiguous segment. `x` holds one row of
/// exogenous regressors per sample of `y` (it may have zero columns).
ArmaxModel fit_armax_segment(std::span<const double> y, const Matrix& x, const ArmaxOrders& orders);

/// Fits every segment and keeps the stable fits. Throws NumericError when no
/// segment survives.
struct ArmaxSegment {
  std::vector<double> y;
  Matrix x;
};
ArmaxEnsemble fit_armax_ensemble(std::span<const ArmaxSegment> segments, const ArmaxOrders& orders);

/// Recursive forecast for the rows of `x_future`. The innovations are
/// filtered over the history and set to zero beyond it.
Vector armax_forecast(const ArmaxModel& model, std::span<const double> y_history,
                      const Matrix& x_history, const Matrix& x_future);

/// Mean of the member forecasts.
Vector armax_ensemble_forecast(const ArmaxEnsemble& ensemble, std::span<const double> y_history,
                               const Matrix& x_history, const Matrix& x_future);

}  // namespace gridbench
