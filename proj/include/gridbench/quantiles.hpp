#pragma once

#include <span>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

/// Ordered probability levels of a forecast fan.
class QuantileGrid {
 public:
  QuantileGrid() : QuantileGrid(evenly_spaced(11, 0.05, 0.95)) {}
  explicit QuantileGrid(std::vector<double> alphas);

  static QuantileGrid evenly_spaced(int count, double lo, double hi);

  const std::vector<double>& alphas() const { return alphas_; }
  std::size_t size() const { return alphas_.size(); }
  double operator[](std::size_t i) const { return alphas_[i]; }

 private:
  std::vector<double> alphas_;
};

/// Linear-interpolation sample quantile of already sorted data.
double sorted_quantile(std::span<const double> sorted, double alpha);

/// Quantile of weighted samples: the weighted CDF is linearly interpolated
/// between the mid-points of each sample's probability mass.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha);

/// Sorts each row in place; fans are non-decreasing in alpha afterwards.
void repair_crossings(Eigen::Ref<Vector> fan_row);

/// Training residuals e = forecast - actual indexed by (step ahead, step of day).
///
/// Step-ahead h runs 1..horizon, step-of-day d 0..steps_per_day-1 and refers
/// to the issue time. Cells are finalized (sorted) before quantile queries.
class ErrorBank {
 public:
  ErrorBank() = default;
  ErrorBank(int horizon, int steps_per_day);

  void add(int h, int d, double residual);
  /// Adds one row of residuals for steps ahead 1..horizon.
  void add_row(int d, std::span<const double> residuals);
  void finalize();

  int horizon() const { return horizon_; }
  int steps_per_day() const { return steps_per_day_; }
  std::size_t cell_size(int h, int d) const { return cell(h, d).size(); }
  std::span<const double> cell_values(int h, int d) const { return cell(h, d); }

  /// Additive shift turning a point forecast into its alpha-quantile:
  /// the alpha-quantile of (actual - forecast) = -residual in cell (h, d).
  /// Empty cells fall back to the pooled residuals of step ahead h.
  double shift(int h, int d, double alpha) const;
  bool cell_empty(int h, int d) const { return cell(h, d).empty(); }

 private:
  const std::vector<double>& cell(int h, int d) const;
  std::vector<double>& cell(int h, int d);

  int horizon_ = 0;
  int steps_per_day_ = 0;
  bool finalized_ = false;
  std::vector<std::vector<double>> cells_;   // (h-1) * steps_per_day + d, negated residuals
  std::vector<std::vector<double>> pooled_;  // per h, negated residuals
};

/// Quantile fan (horizon x |grid|) around a point forecast issued at step of
/// day d: q_alpha = point + shift(h, d, alpha), repaired for crossings.
Matrix empirical_quantiles(const ErrorBank& bank, const QuantileGrid& grid,
                           const Vector& point, int d);

}  // namespace gridbench
