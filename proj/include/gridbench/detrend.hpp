#pragma once

#include <span>

#include "gridbench/types.hpp"

namespace gridbench {

/// Linear exogenous trend y ~ beta[0]*GHI + beta[1]*T + beta[2].
struct DetrendModel {
  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  /// Columns dropped for collinearity (their coefficient is held at 0).
  bool dropped_ghi = false;
  bool dropped_temperature = false;

  double trend(double ghi, double temperature) const {
    return beta[0] * ghi + beta[1] * temperature + beta[2];
  }
  double apply(double y, double ghi, double temperature) const { return y - trend(ghi, temperature); }
  double invert(double residual, double ghi, double temperature) const {
    return residual + trend(ghi, temperature);
  }
};

/// Ordinary least squares on [GHI, T, 1]. Columns that add no rank are
/// dropped (the intercept is always kept).
DetrendModel fit_detrend(std::span<const double> y, std::span<const double> ghi,
                         std::span<const double> temperature);

}  // namespace gridbench
