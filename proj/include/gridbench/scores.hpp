#pragma once

#include <span>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

/// Quantile (pinball) loss of forecast q for outcome y at level alpha.
double pinball_loss(double q, double y, double alpha);

/// Trapezoidal mean of values(alpha) over the span of the alphas, i.e. the
/// integral rescaled to [0, 1]. A single point returns its value. Points are
/// sorted by alpha first, so the order of the inputs does not matter.
double trapezoid_mean(std::span<const double> alphas, std::span<const double> values);

struct QuantileScoreReport {
  std::vector<double> alphas;
  Vector mean_loss;      // per alpha, over all instants and steps ahead
  double score = 0.0;    // trapezoid_mean of mean_loss
  Matrix loss_by_step;   // steps ahead x alphas
  Vector score_by_step;  // per step ahead
  Index samples = 0;     // forecast instants
};

/// Running sums of pinball losses for fans (steps ahead x alphas).
class QuantileScoreAccumulator {
 public:
  QuantileScoreAccumulator(std::vector<double> alphas, int horizon);

  void add(const Matrix& fan, const Eigen::Ref<const Vector>& actual);
  QuantileScoreReport report() const;

 private:
  std::vector<double> alphas_;
  Matrix sums_;
  Index samples_ = 0;
};

QuantileScoreReport quantile_score(const std::vector<Matrix>& fans, const Matrix& actuals,
                                   const std::vector<double>& alphas);

/// Elementwise ratio of per-step scores; 0/0 is 1.
Vector normalized_curve(const Vector& scores, const Vector& reference);

}  // namespace gridbench
