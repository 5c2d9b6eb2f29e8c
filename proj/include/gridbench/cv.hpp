#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridbench/armax.hpp"
#include "gridbench/boosted_trees.hpp"
#include "gridbench/folds.hpp"
#include "gridbench/holt_winters.hpp"
#include "gridbench/knn.hpp"
#include "gridbench/quantiles.hpp"

namespace gridbench {

enum class Method { persistence, holt_winters, armax, knn, boosted_trees };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct ForecastSettings {
  EmbeddingSpec embedding;
  QuantileGrid grid;
  /// NWP variables used by the detrend and by the ARMAX regressors.
  std::string temperature = "T";
  std::string irradiance = "GHI";

  HwFitOptions hw;
  bool hw_literal_s2_decay = false;
  ArmaxOrders armax;
  int armax_daily_harmonics = 3;
  int armax_weekly_harmonics = 2;
  KnnOptions knn;
  BoostedTreesOptions trees;
  /// Boosted-trees residuals come from models fitted on the other half of
  /// the training sequences instead of the in-sample fit.
  bool cross_fit_residuals = true;

  /// Besides the training rows issued at a tested step of day (which feed
  /// the error banks), every n-th training row keeps its residuals for the
  /// error covariance estimate.
  int residual_stride = 24;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Forecasts of one series on the test rows of one fold, plus the training
/// residuals kept for quantile banks and reconciliation.
struct FoldForecast {
  int fold = 0;
  std::vector<Index> test_rows;  // SamplePair rows
  std::vector<Index> issue_index;
  std::vector<int> issue_step_of_day;
  Matrix point;                   // test rows x horizon
  Matrix actual;                  // test rows x horizon
  std::vector<Matrix> quantiles;  // per test row: horizon x alphas

  std::vector<Index> residual_rows;
  std::vector<int> residual_step_of_day;
  Matrix residuals;  // e = forecast - actual, residual rows x horizon
};

/// Stacked cross-validated forecasts of one series.
struct ForecastResult {
  std::string series;
  Method method = Method::persistence;
  int horizon = 0;
  QuantileGrid grid;
  std::vector<FoldForecast> folds;

  Index test_row_count() const;
};

/// Optional observer of each fitted model (series, fold, model document).
using ModelSink = std::function<void(const std::string&, int, const nlohmann::json&)>;

/// Cross-validates one method on one column of `frame`.
///
/// The frame must start at local midnight and span plan.span_days whole
/// days. NWP values come from `nwp` when given, otherwise from frame columns
/// of the same name. `series_index` only enters seed derivation.
ForecastResult forecast_series_cv(Method method, const TimeSeriesFrame& frame,
                                  const std::string& series, const ExogenousSource* nwp,
                                  const FoldPlan& plan, const ForecastSettings& settings,
                                  int series_index = 0, const ModelSink& sink = {});

/// Runs forecast_series_cv for every listed series.
std::vector<ForecastResult> run_forecaster_cv(Method method, const TimeSeriesFrame& frame,
                                              const std::vector<std::string>& series,
                                              const ExogenousSource* nwp, const FoldPlan& plan,
                                              const ForecastSettings& settings,
                                              const ModelSink& sink = {});

/// Error bank of one fold from its kept training residuals.
ErrorBank error_bank_from_residuals(const std::vector<int>& step_of_day, const Matrix& residuals,
                                    int steps_per_day);

/// Seed for one (series, fold) task derived from the run seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace gridbench
