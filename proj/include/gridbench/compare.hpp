#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridbench/cv.hpp"
#include "gridbench/hierarchy.hpp"
#include "gridbench/kpi.hpp"
#include "gridbench/scores.hpp"

namespace gridbench {

/// KPIs of one series under one forecaster or reconciliation variant.
struct SeriesScores {
  std::string series;
  KpiMatrix rmse;
  KpiMatrix mape;
  QuantileScoreReport qs;
  long long mape_exclusions = 0;
  /// Normalized by the persistence scores of the same series.
  std::optional<KpiMatrix> nrmse;
  std::optional<KpiMatrix> nmape;
  std::optional<Vector> nqs_by_step;
};

/// Scores of every series (hierarchy order) for one forecast set.
struct MethodEvaluation {
  std::string name;
  std::vector<SeriesScores> series;
};

MethodEvaluation evaluate_forecasts(const std::string& name, const std::vector<ForecastResult>& results,
                                    int folds, int steps_per_day, double mape_floor);

/// Fills the normalized fields of `eval` from the matching persistence scores.
void normalize_against(MethodEvaluation& eval, const MethodEvaluation& persistence);

/// Aggregate (top series) and bottom-average value of one score.
struct ScorePair {
  double top = 0.0;
  double bottom_average = 0.0;
};

struct SummaryRow {
  std::string method;
  ScorePair mape;
  ScorePair rmse;
  ScorePair qs;
  ScorePair nmape;
  ScorePair nrmse;
  ScorePair nqs;
};

SummaryRow summary_row(const MethodEvaluation& eval, const Hierarchy& hierarchy);

struct CellRanking {
  std::string cell;                 // e.g. "mape_top"
  std::vector<std::string> order;   // best first
  bool tie = false;                 // the best value is shared
};

struct ForecasterComparison {
  std::vector<SummaryRow> table;
  std::vector<CellRanking> rankings;  // MAPE and RMSE, top and bottom average
  /// Method strictly best in all four ranked cells.
  std::optional<std::string> winner;
};

/// Needs at least two summary rows.
ForecasterComparison compare_forecasters(const std::vector<SummaryRow>& rows);

struct ReconciliationEffect {
  std::string variant;
  /// Relative RMSE reduction 1 - reconciled / base per step ahead.
  Vector top_curve;
  Vector hierarchy_average_curve;
  /// Per-bin reductions, one column per series in hierarchy order.
  Matrix binned;  // bins x series
  Vector top_binned;
  double top_mean = 0.0;           // reduction of the mean top RMSE profile
  double bottom_mean = 0.0;        // mean over bottom series of their reductions
  double hierarchy_mean = 0.0;     // mean over all series
};

/// RMSE reductions of each reconciled variant with respect to the base
/// forecasts, from the horizon profiles of the raw RMSE maps.
std::vector<ReconciliationEffect> compare_reconciliation(const MethodEvaluation& base,
                                                         const std::vector<MethodEvaluation>& reconciled,
                                                         const Hierarchy& hierarchy, int bin_width);

}  // namespace gridbench
