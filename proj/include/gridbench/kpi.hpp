#pragma once

#include <string_view>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

enum class Metric { rmse, mape, qs };

std::string_view to_string(Metric metric);

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// KPI surface indexed (issue step of day d, step ahead h - 1). Cells
/// without observations are flagged in `present` and hold NaN.
struct KpiMatrix {
  Metric metric = Metric::rmse;
  bool normalized = false;
  Matrix values;
  Mask present;
  /// Folds that contributed to each cell.
  Eigen::MatrixXi fold_counts;

  Index present_count() const { return present.count(); }
  /// Mean over present cells (NaN when none).
  double mean() const;
};

/// Error sums per (fold, step of day, step ahead).
class ErrorCube {
 public:
  ErrorCube(int steps_per_day, int horizon, int folds, double mape_floor = 0.1);

  /// h is 1-based; error = forecast - actual.
  void add(int fold, int d, int h, double error, double actual);

  int steps_per_day() const { return spd_; }
  int horizon() const { return horizon_; }
  int folds() const { return folds_; }
  double mape_floor() const { return floor_; }
  /// Observations left out of MAPE because |actual| < floor.
  long long mape_exclusions() const { return excluded_; }

  double squared_sum(int fold, int d, int h) const { return sq_[at(fold, d, h)]; }
  double ape_sum(int fold, int d, int h) const { return ape_[at(fold, d, h)]; }
  int count(int fold, int d, int h) const { return n_[at(fold, d, h)]; }
  int ape_count(int fold, int d, int h) const { return n_ape_[at(fold, d, h)]; }

 private:
  std::size_t at(int fold, int d, int h) const;

  int spd_;
  int horizon_;
  int folds_;
  double floor_;
  long long excluded_ = 0;
  std::vector<double> sq_;
  std::vector<double> ape_;
  std::vector<int> n_;
  std::vector<int> n_ape_;
};

/// Within-cell RMSE per fold, averaged over the folds where the cell is
/// populated.
KpiMatrix rmse_map(const ErrorCube& cube);

/// 100 x fold mean of the within-cell mean |e| / |y| (floored actuals excluded).
KpiMatrix mape_map(const ErrorCube& cube);

/// raw / reference per cell. 0/0 is 1; x/0 with x != 0 is marked missing.
KpiMatrix normalize(const KpiMatrix& raw, const KpiMatrix& reference);

/// Cells where a normalized KPI is >= 1 (no better than the reference).
Mask no_improvement_mask(const KpiMatrix& normalized);

/// Mean over present step-of-day cells for each step ahead (NaN when none).
Vector horizon_profile(const KpiMatrix& map);

/// Mean over series of their horizon profiles, skipping NaN entries.
Vector average_profile(const std::vector<Vector>& profiles);

/// Mean of per-series map means (the "bottom average" column of the summary).
double average_of_means(const std::vector<KpiMatrix>& maps);

/// 1 - sum(reconciled) / sum(base) over consecutive bins of `bin_width`
/// steps ahead; a positive value means the reconciled RMSE is lower.
Vector binned_reduction(const Vector& base_profile, const Vector& reconciled_profile, int bin_width = 24);

/// 1 - reconciled / base elementwise.
Vector relative_reduction(const Vector& base_profile, const Vector& reconciled_profile);

}  // namespace gridbench
