#include "gridbench/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

MethodEvaluation evaluate_forecasts(const std::string& name, const std::vector<ForecastResult>& results,
                                    int folds, int steps_per_day, double mape_floor) {
  MethodEvaluation eval;
  eval.name = name;
  for (const auto& r : results) {
    ErrorCube cube(steps_per_day, r.horizon, folds, mape_floor);
    QuantileScoreAccumulator acc(r.grid.alphas(), r.horizon);
    for (const auto& f : r.folds) {
      for (Index i = 0; i < f.point.rows(); ++i) {
        const int d = f.issue_step_of_day[static_cast<std::size_t>(i)];
        for (Index h = 0; h < f.point.cols(); ++h) {
          cube.add(f.fold, d, static_cast<int>(h) + 1, f.point(i, h) - f.actual(i, h), f.actual(i, h));
        }
        acc.add(f.quantiles[static_cast<std::size_t>(i)], f.actual.row(i).transpose());
      }
    }
    SeriesScores s;
    s.series = r.series;
    s.rmse = rmse_map(cube);
    s.mape = mape_map(cube);
    s.qs = acc.report();
    s.mape_exclusions = cube.mape_exclusions();
    eval.series.push_back(std::move(s));
  }
  return eval;
}

void normalize_against(MethodEvaluation& eval, const MethodEvaluation& persistence) {
  if (eval.series.size() != persistence.series.size()) throw DataError("normalization needs matching series");
  for (std::size_t i = 0; i < eval.series.size(); ++i) {
    auto& s = eval.series[i];
    const auto& p = persistence.series[i];
    if (s.series != p.series) throw DataError(fmt::format("series {} vs {} misaligned", s.series, p.series));
    s.nrmse = normalize(s.rmse, p.rmse);
    s.nmape = normalize(s.mape, p.mape);
    s.nqs_by_step = normalized_curve(s.qs.score_by_step, p.qs.score_by_step);
  }
}

namespace {

double nan_mean(const Vector& v) {
  double sum = 0.0;
  int n = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      sum += v(i);
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

template <class Get>
ScorePair pair_of(const MethodEvaluation& eval, const Hierarchy& hierarchy, Get get) {
  ScorePair p;
  p.top = get(eval.series.front());
  double sum = 0.0;
  int n = 0;
  for (Index r = hierarchy.n_upper(); r < hierarchy.size(); ++r) {
    const double v = get(eval.series[static_cast<std::size_t>(r)]);
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  p.bottom_average = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  return p;
}

double optional_mean(const std::optional<KpiMatrix>& m) {
  return m ? m->mean() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

SummaryRow summary_row(const MethodEvaluation& eval, const Hierarchy& hierarchy) {
  if (static_cast<Index>(eval.series.size()) != hierarchy.size()) {
    throw DataError(fmt::format("{} has {} series, the hierarchy {}", eval.name, eval.series.size(), hierarchy.size()));
  }
  SummaryRow row;
  row.method = eval.name;
  row.mape = pair_of(eval, hierarchy, [](const SeriesScores& s) { return s.mape.mean(); });
  row.rmse = pair_of(eval, hierarchy, [](const SeriesScores& s) { return s.rmse.mean(); });
  row.qs = pair_of(eval, hierarchy, [](const SeriesScores& s) { return s.qs.score; });
  row.nmape = pair_of(eval, hierarchy, [](const SeriesScores& s) { return optional_mean(s.nmape); });
  row.nrmse = pair_of(eval, hierarchy, [](const SeriesScores& s) { return optional_mean(s.nrmse); });
  row.nqs = pair_of(eval, hierarchy, [](const SeriesScores& s) {
    return s.nqs_by_step ? nan_mean(*s.nqs_by_step) : std::numeric_limits<double>::quiet_NaN();
  });
  return row;
}

ForecasterComparison compare_forecasters(const std::vector<SummaryRow>& rows) {
  if (rows.size() < 2) throw ConfigError("comparing forecasters needs at least two of them");
  ForecasterComparison out;
  out.table = rows;

  struct Cell {
    const char* name;
    double (*get)(const SummaryRow&);
  };
  const Cell cells[] = {
      {"mape_top", [](const SummaryRow& r) { return r.mape.top; }},
      {"mape_bottom_average", [](const SummaryRow& r) { return r.mape.bottom_average; }},
      {"rmse_top", [](const SummaryRow& r) { return r.rmse.top; }},
      {"rmse_bottom_average", [](const SummaryRow& r) { return r.rmse.bottom_average; }},
  };
  std::vector<std::size_t> wins(rows.size(), 0);
  for (const auto& cell : cells) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    // NaN scores rank last; ties keep the input order.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = cell.get(rows[a]);
      const double vb = cell.get(rows[b]);
      if (std::isnan(va)) return false;
      if (std::isnan(vb)) return true;
      return va < vb;
    });
    CellRanking ranking;
    ranking.cell = cell.name;
    for (std::size_t i : order) ranking.order.push_back(rows[i].method);
    ranking.tie = cell.get(rows[order[0]]) == cell.get(rows[order[1]]);
    if (!ranking.tie && !std::isnan(cell.get(rows[order[0]]))) ++wins[order[0]];
    out.rankings.push_back(std::move(ranking));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (wins[i] == std::size(cells)) out.winner = rows[i].method;
  }
  return out;
}

std::vector<ReconciliationEffect> compare_reconciliation(const MethodEvaluation& base,
                                                         const std::vector<MethodEvaluation>& reconciled,
                                                         const Hierarchy& hierarchy, int bin_width) {
  const auto n = static_cast<std::size_t>(hierarchy.size());
  if (base.series.size() != n) throw DataError("base scores do not match the hierarchy");
  std::vector<Vector> base_profiles;
  for (const auto& s : base.series) base_profiles.push_back(horizon_profile(s.rmse));

  auto ratio_reduction = [](const Vector& b, const Vector& r) {
    const double mb = nan_mean(b);
    return mb == 0.0 ? 0.0 : 1.0 - nan_mean(r) / mb;
  };

  std::vector<ReconciliationEffect> out;
  for (const auto& rec : reconciled) {
    if (rec.series.size() != n) throw DataError(fmt::format("{} does not match the hierarchy", rec.name));
    ReconciliationEffect e;
    e.variant = rec.name;
    std::vector<Vector> curves;
    double bottom_sum = 0.0;
    double all_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rec.series[i].series != base.series[i].series) throw DataError("reconciled series misaligned with base");
      const Vector profile = horizon_profile(rec.series[i].rmse);
      curves.push_back(relative_reduction(base_profiles[i], profile));
      const Vector binned = binned_reduction(base_profiles[i], profile, bin_width);
      if (e.binned.size() == 0) e.binned.resize(binned.size(), static_cast<Index>(n));
      e.binned.col(static_cast<Index>(i)) = binned;
      const double r = ratio_reduction(base_profiles[i], profile);
      all_sum += r;
      if (hierarchy.is_bottom(static_cast<Index>(i))) bottom_sum += r;
      if (i == 0) e.top_mean = r;
    }
    e.top_curve = curves.front();
    e.top_binned = e.binned.col(0);
    e.hierarchy_average_curve = average_profile(curves);
    e.bottom_mean = bottom_sum / static_cast<double>(hierarchy.n_bottom);
    e.hierarchy_mean = all_sum / static_cast<double>(n);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace gridbench
