#include "gridbench/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <spdlog/fmt/fmt.h>

#include "gridbench/detrend.hpp"
#include "gridbench/model_io.hpp"
#include "gridbench/parallel.hpp"
#include "gridbench/persistence.hpp"

namespace gridbench {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::persistence: return "persistence";
    case Method::holt_winters: return "holt_winters";
    case Method::armax: return "armax";
    case Method::knn: return "knn";
    case Method::boosted_trees: return "boosted_trees";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::persistence, Method::holt_winters, Method::armax, Method::knn, Method::boosted_trees}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError(fmt::format("unknown forecasting method '{}'", name));
}

Index ForecastResult::test_row_count() const {
  Index n = 0;
  for (const auto& f : folds) n += static_cast<Index>(f.test_rows.size());
  return n;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(base), hi(base), lo(a), hi(a), lo(b), hi(b)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

ErrorBank error_bank_from_residuals(const std::vector<int>& step_of_day, const Matrix& residuals,
                                    int steps_per_day) {
  if (static_cast<Index>(step_of_day.size()) != residuals.rows()) {
    throw DataError("error bank: residual rows and steps of day differ");
  }
  ErrorBank bank(static_cast<int>(residuals.cols()), steps_per_day);
  std::vector<double> row(static_cast<std::size_t>(residuals.cols()));
  for (Index r = 0; r < residuals.rows(); ++r) {
    for (Index c = 0; c < residuals.cols(); ++c) row[static_cast<std::size_t>(c)] = residuals(r, c);
    bank.add_row(step_of_day[static_cast<std::size_t>(r)], row);
  }
  bank.finalize();
  return bank;
}

namespace {

/// NWP values as seen from a given issue time.
class ExogenousView {
 public:
  ExogenousView(const TimeSeriesFrame& frame, const ExogenousSource* source)
      : frame_(frame), source_(source) {}

  /// Latest available value at each instant of the frame.
  Vector as_of(const std::string& variable) const {
    if (source_ == nullptr) return frame_.column(variable);
    Vector out(frame_.size());
    for (Index i = 0; i < frame_.size(); ++i) {
      const Timestamp ts = frame_.timestamp(i);
      source_->fill(variable, ts, ts, frame_.step_seconds(), std::span<double>(&out(i), 1));
    }
    return out;
  }

  /// Values for t+1..t+out.size() issued at t.
  void future(const std::string& variable, Index t, std::span<double> out) const {
    if (source_ != nullptr) {
      source_->fill(variable, frame_.timestamp(t), frame_.timestamp(t + 1), frame_.step_seconds(), out);
      return;
    }
    const auto col = frame_.column(variable);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = col(t + 1 + static_cast<Index>(k));
  }

 private:
  const TimeSeriesFrame& frame_;
  const ExogenousSource* source_;
};

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) { return m(rows, Eigen::all); }

struct MethodOutput {
  Matrix test_point;
  std::vector<Matrix> test_quantiles;  // empty when the fan comes from an error bank
  Matrix residual_point;
  nlohmann::json model;
};

struct FoldInputs {
  const TimeSeriesFrame& frame;
  const ExogenousView& exog;
  const SamplePair& pair;
  const FoldPlan& plan;
  const ForecastSettings& settings;
  const Vector& y;
  const FoldPlan::Fold& fold;
  const std::vector<Index>& residual_rows;
  std::uint64_t seed;
  bool want_model;
};

std::vector<Index> issues_of(const SamplePair& pair, const std::vector<Index>& rows) {
  std::vector<Index> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(pair.issue_index[static_cast<std::size_t>(r)]);
  return out;
}

/// Applies `predict(issue index) -> Vector` to test and residual rows.
template <class Predict>
void predict_rows(const FoldInputs& in, MethodOutput& out, Predict&& predict) {
  const int H = in.pair.horizon;
  const auto& test = in.fold.test_rows;
  out.test_point.resize(static_cast<Index>(test.size()), H);
  out.residual_point.resize(static_cast<Index>(in.residual_rows.size()), H);
  const std::size_t total = test.size() + in.residual_rows.size();
  parallel_for(total, in.settings.workers, [&](std::size_t k) {
    if (k < test.size()) {
      out.test_point.row(static_cast<Index>(k)) = predict(in.pair.issue_index[static_cast<std::size_t>(test[k])]).transpose();
    } else {
      const std::size_t r = k - test.size();
      out.residual_point.row(static_cast<Index>(r)) =
          predict(in.pair.issue_index[static_cast<std::size_t>(in.residual_rows[r])]).transpose();
    }
  });
}

MethodOutput run_persistence(const FoldInputs& in) {
  MethodOutput out;
  const int spd = in.frame.steps_per_day();
  const std::span<const double> y(in.y.data(), static_cast<std::size_t>(in.y.size()));
  predict_rows(in, out, [&](Index t) { return persistence_forecast(y, t, in.pair.horizon, spd); });
  if (in.want_model) out.model = nlohmann::json{{"kind", "persistence"}, {"period", spd}};
  return out;
}

std::vector<Index> training_instants(const FoldInputs& in) {
  std::vector<Index> idx;
  const Index spd = in.plan.steps_per_day;
  for (int start : in.fold.sequence_start_days) {
    for (Index i = start * spd; i < (start + FoldPlan::kTrainDays) * spd; ++i) idx.push_back(i);
  }
  return idx;
}

MethodOutput run_holt_winters(const FoldInputs& in) {
  const auto& s = in.settings;
  const int H = in.pair.horizon;
  const int e = in.pair.embed;
  const Vector ghi = in.exog.as_of(s.irradiance);
  const Vector temp = in.exog.as_of(s.temperature);

  const std::vector<Index> train = training_instants(in);
  std::vector<double> ty, tg, tt;
  for (Index i : train) {
    ty.push_back(in.y(i));
    tg.push_back(ghi(i));
    tt.push_back(temp(i));
  }
  const DetrendModel detrend = fit_detrend(ty, tg, tt);
  std::vector<double> z(static_cast<std::size_t>(in.y.size()));
  for (Index i = 0; i < in.y.size(); ++i) z[static_cast<std::size_t>(i)] = detrend.apply(in.y(i), ghi(i), temp(i));

  HwParams params;
  params.config.p1 = in.plan.steps_per_day;
  params.config.p2 = 7 * in.plan.steps_per_day;
  params.config.literal_s2_decay = s.hw_literal_s2_decay;
  std::vector<double> tz;
  for (Index i : train) tz.push_back(z[static_cast<std::size_t>(i)]);
  params.initial = hw_initial_state_from_samples(train, tz, params.config);
  params.detrend = detrend;

  HwFitOptions options = s.hw;
  options.seed = in.seed;
  const std::vector<Index> issues = issues_of(in.pair, in.fold.train_rows);
  params.per_step = fit_holt_winters(z, issues, e, H, *params.initial, params.config, options);

  MethodOutput out;
  predict_rows(in, out, [&](Index t) {
    const std::span<const double> window(z.data() + (t - e + 1), static_cast<std::size_t>(e));
    Vector point = hw_forecast(params, window, t - e + 1);
    std::vector<double> g(static_cast<std::size_t>(H)), tf(static_cast<std::size_t>(H));
    in.exog.future(s.irradiance, t, g);
    in.exog.future(s.temperature, t, tf);
    for (int j = 0; j < H; ++j) point(j) = detrend.invert(point(j), g[static_cast<std::size_t>(j)], tf[static_cast<std::size_t>(j)]);
    return point;
  });
  if (in.want_model) out.model = to_json(params);
  return out;
}

/// [1, T, GHI, daily harmonics, weekly harmonics] at frame index i.
void armax_regressors(const TimeSeriesFrame& frame, const ForecastSettings& s, Index i, double temperature,
                      double ghi, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) {
  const int spd = frame.steps_per_day();
  const double day_phase = static_cast<double>(frame.step_of_day(i)) / spd;
  const double week_phase = (frame.day_of_week(i) * spd + frame.step_of_day(i)) / (7.0 * spd);
  Index c = 0;
  out(c++) = 1.0;
  out(c++) = temperature;
  out(c++) = ghi;
  for (int k = 1; k <= s.armax_daily_harmonics; ++k) {
    out(c++) = std::sin(2.0 * std::numbers::pi * k * day_phase);
    out(c++) = std::cos(2.0 * std::numbers::pi * k * day_phase);
  }
  for (int k = 1; k <= s.armax_weekly_harmonics; ++k) {
    out(c++) = std::sin(2.0 * std::numbers::pi * k * week_phase);
    out(c++) = std::cos(2.0 * std::numbers::pi * k * week_phase);
  }
}

MethodOutput run_armax(const FoldInputs& in) {
  const auto& s = in.settings;
  const int H = in.pair.horizon;
  const int e = in.pair.embed;
  const Index nx = 3 + 2 * s.armax_daily_harmonics + 2 * s.armax_weekly_harmonics;
  const Vector ghi = in.exog.as_of(s.irradiance);
  const Vector temp = in.exog.as_of(s.temperature);
  const Index spd = in.plan.steps_per_day;

  std::vector<ArmaxSegment> segments;
  for (int start : in.fold.sequence_start_days) {
    ArmaxSegment seg;
    const Index begin = start * spd;
    const Index n = FoldPlan::kTrainDays * spd;
    seg.y.resize(static_cast<std::size_t>(n));
    seg.x.resize(n, nx);
    for (Index k = 0; k < n; ++k) {
      seg.y[static_cast<std::size_t>(k)] = in.y(begin + k);
      armax_regressors(in.frame, s, begin + k, temp(begin + k), ghi(begin + k), seg.x.row(k));
    }
    segments.push_back(std::move(seg));
  }
  const ArmaxEnsemble ensemble = fit_armax_ensemble(segments, s.armax);

  MethodOutput out;
  predict_rows(in, out, [&](Index t) {
    const Index first = t - e + 1;
    Matrix xh(e, nx);
    for (Index k = 0; k < e; ++k) armax_regressors(in.frame, s, first + k, temp(first + k), ghi(first + k), xh.row(k));
    std::vector<double> g(static_cast<std::size_t>(H)), tf(static_cast<std::size_t>(H));
    in.exog.future(s.irradiance, t, g);
    in.exog.future(s.temperature, t, tf);
    Matrix xf(H, nx);
    for (int j = 0; j < H; ++j) {
      armax_regressors(in.frame, s, t + 1 + j, tf[static_cast<std::size_t>(j)], g[static_cast<std::size_t>(j)], xf.row(j));
    }
    const std::span<const double> hist(in.y.data() + first, static_cast<std::size_t>(e));
    return armax_ensemble_forecast(ensemble, hist, xh, xf);
  });
  if (in.want_model) out.model = to_json(ensemble);
  return out;
}

std::vector<std::size_t> positions_in(const std::vector<Index>& sorted, const std::vector<Index>& subset) {
  std::vector<std::size_t> pos;
  pos.reserve(subset.size());
  for (Index r : subset) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), r);
    pos.push_back(static_cast<std::size_t>(it - sorted.begin()));
  }
  return pos;
}

MethodOutput run_knn(const FoldInputs& in) {
  const auto& train = in.fold.train_rows;
  const KnnModel model = fit_knn(take_rows(in.pair.X, train), take_rows(in.pair.Y, train), in.settings.knn);
  const auto& grid = in.settings.grid;
  const auto& test = in.fold.test_rows;
  const std::vector<std::size_t> pos = positions_in(train, in.residual_rows);

  MethodOutput out;
  const int H = in.pair.horizon;
  out.test_point.resize(static_cast<Index>(test.size()), H);
  out.test_quantiles.resize(test.size());
  out.residual_point.resize(static_cast<Index>(in.residual_rows.size()), H);
  const std::size_t total = test.size() + in.residual_rows.size();
  parallel_for(total, in.settings.workers, [&](std::size_t k) {
    if (k < test.size()) {
      KnnPrediction p = knn_forecast(model, in.pair.X.row(test[k]).transpose(), grid);
      out.test_point.row(static_cast<Index>(k)) = p.point.transpose();
      out.test_quantiles[k] = std::move(p.quantiles);
    } else {
      const std::size_t r = k - test.size();
      // Leave-one-out so the kept residuals are not trivially zero.
      const KnnPrediction p = knn_forecast(model, in.pair.X.row(in.residual_rows[r]).transpose(), grid,
                                           static_cast<Index>(pos[r]));
      out.residual_point.row(static_cast<Index>(r)) = p.point.transpose();
    }
  });
  if (in.want_model) out.model = to_json(model);
  return out;
}

MethodOutput run_boosted_trees(const FoldInputs& in) {
  const auto& train = in.fold.train_rows;
  const Matrix X = take_rows(in.pair.X, train);
  const Matrix Y = take_rows(in.pair.Y, train);
  const FeatureBinner binner = FeatureBinner::fit(X, in.settings.trees.max_bins);
  const BinnedMatrix binned = binner.transform(X);
  BoostedTreesOptions options = in.settings.trees;
  options.seed = in.seed;
  const std::vector<BoostedTreesModel> models = fit_boosted_trees_miso(binned, binner, Y, options, in.settings.workers);

  const auto& test = in.fold.test_rows;
  const std::vector<std::size_t> pos = positions_in(train, in.residual_rows);
  const int H = in.pair.horizon;
  MethodOutput out;
  out.test_point.resize(static_cast<Index>(test.size()), H);
  out.residual_point.resize(static_cast<Index>(in.residual_rows.size()), H);
  for (std::size_t k = 0; k < test.size(); ++k) {
    const Vector x = in.pair.X.row(test[k]).transpose();
    for (int j = 0; j < H; ++j) out.test_point(static_cast<Index>(k), j) = models[static_cast<std::size_t>(j)].predict(x);
  }

  // Residuals either in-sample or from models fitted on the other half of
  // the training sequences (alternating by sequence).
  std::vector<int> group(train.size(), 0);
  const Index spd = in.plan.steps_per_day;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Index day = in.pair.issue_index[static_cast<std::size_t>(train[i])] / spd;
    const auto& starts = in.fold.sequence_start_days;
    const auto it = std::upper_bound(starts.begin(), starts.end(), static_cast<int>(day));
    group[i] = static_cast<int>(it - starts.begin() - 1) % 2;
  }
  const bool cross_fit = in.settings.cross_fit_residuals && in.fold.sequence_start_days.size() >= 2;
  std::vector<std::vector<BoostedTreesModel>> halves;
  if (cross_fit) {
    for (int g = 0; g < 2; ++g) {
      std::vector<Index> fit_rows;
      for (std::size_t i = 0; i < train.size(); ++i)
        if (group[i] != g) fit_rows.push_back(static_cast<Index>(i));
      BoostedTreesOptions o = options;
      o.seed = derive_seed(in.seed, 1, static_cast<std::uint64_t>(g));
      halves.push_back(fit_boosted_trees_miso(binned, binner, Y, o, in.settings.workers, fit_rows));
    }
  }
  for (std::size_t r = 0; r < pos.size(); ++r) {
    const std::uint8_t* codes = binned.row(static_cast<Index>(pos[r]));
    const auto& use = cross_fit ? halves[static_cast<std::size_t>(group[pos[r]])] : models;
    for (int j = 0; j < H; ++j) out.residual_point(static_cast<Index>(r), j) = use[static_cast<std::size_t>(j)].predict_binned(codes);
  }
  if (in.want_model) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& m : models) steps.push_back(to_json(m));
    out.model = {{"kind", "boosted_trees_miso"}, {"binner", to_json(binner)}, {"steps", std::move(steps)}};
  }
  return out;
}

}  // namespace

ForecastResult forecast_series_cv(Method method, const TimeSeriesFrame& frame,
                                  const std::string& series, const ExogenousSource* nwp,
                                  const FoldPlan& plan, const ForecastSettings& settings,
                                  int series_index, const ModelSink& sink) {
  if (!frame.starts_at_midnight()) throw DataError("cross-validation frame must start at local midnight");
  if (frame.steps_per_day() != plan.steps_per_day || frame.whole_days() < plan.span_days) {
    throw DataError("fold plan does not match the frame");
  }
  if (settings.embedding.horizon != plan.horizon || settings.embedding.embed != plan.embed) {
    throw ConfigError("embedding settings do not match the fold plan");
  }
  if (settings.residual_stride < 1) throw ConfigError("residual_stride must be >= 1");

  // Model inputs only need NWP features for the learning methods.
  EmbeddingSpec spec = settings.embedding;
  if (method != Method::knn && method != Method::boosted_trees) spec.nwp.clear();
  const TimeSeriesFrame span = frame.slice(0, static_cast<Index>(plan.span_days) * plan.steps_per_day);
  const SamplePair pair = hankel_embed(span, series, spec, nwp);
  const ExogenousView exog(span, nwp);
  const Vector y = span.column(series);

  ForecastResult result;
  result.series = series;
  result.method = method;
  result.horizon = plan.horizon;
  result.grid = settings.grid;

  for (int f = 0; f < plan.k; ++f) {
    const auto& fold = plan.folds[static_cast<std::size_t>(f)];
    FoldForecast ff;
    ff.fold = f;
    ff.test_rows = fold.test_rows;
    if (fold.test_rows.empty() || fold.train_rows.empty()) {
      result.folds.push_back(std::move(ff));
      continue;
    }

    std::set<int> tested_steps;
    for (Index r : fold.test_rows) tested_steps.insert(pair.issue_step_of_day[static_cast<std::size_t>(r)]);
    std::vector<Index> residual_rows;
    for (std::size_t i = 0; i < fold.train_rows.size(); ++i) {
      const Index r = fold.train_rows[i];
      if (pair.issue_index[static_cast<std::size_t>(r)] + 1 < plan.steps_per_day) continue;
      if (tested_steps.count(pair.issue_step_of_day[static_cast<std::size_t>(r)]) > 0 ||
          i % static_cast<std::size_t>(settings.residual_stride) == 0) {
        residual_rows.push_back(r);
      }
    }

    const FoldInputs in{span, exog, pair, plan, settings, y, fold, residual_rows,
                        derive_seed(settings.seed, static_cast<std::uint64_t>(series_index), static_cast<std::uint64_t>(f)),
                        static_cast<bool>(sink)};
    MethodOutput out;
    switch (method) {
      case Method::persistence: out = run_persistence(in); break;
      case Method::holt_winters: out = run_holt_winters(in); break;
      case Method::armax: out = run_armax(in); break;
      case Method::knn: out = run_knn(in); break;
      case Method::boosted_trees: out = run_boosted_trees(in); break;
    }
    if (!out.test_point.allFinite() || !out.residual_point.allFinite()) {
      throw NumericError(fmt::format("{} produced non-finite forecasts for '{}' in fold {}", to_string(method), series, f));
    }

    for (Index r : fold.test_rows) {
      ff.issue_index.push_back(pair.issue_index[static_cast<std::size_t>(r)]);
      ff.issue_step_of_day.push_back(pair.issue_step_of_day[static_cast<std::size_t>(r)]);
    }
    ff.point = std::move(out.test_point);
    ff.actual = take_rows(pair.Y, fold.test_rows);
    ff.residual_rows = residual_rows;
    for (Index r : residual_rows) ff.residual_step_of_day.push_back(pair.issue_step_of_day[static_cast<std::size_t>(r)]);
    ff.residuals = out.residual_point - take_rows(pair.Y, residual_rows);

    if (!out.test_quantiles.empty()) {
      ff.quantiles = std::move(out.test_quantiles);
    } else {
      const ErrorBank bank = error_bank_from_residuals(ff.residual_step_of_day, ff.residuals, plan.steps_per_day);
      for (std::size_t k = 0; k < ff.test_rows.size(); ++k) {
        ff.quantiles.push_back(empirical_quantiles(bank, settings.grid, ff.point.row(static_cast<Index>(k)).transpose(),
                                                   ff.issue_step_of_day[k]));
      }
    }
    if (sink) sink(series, f, out.model);
    result.folds.push_back(std::move(ff));
  }
  return result;
}

std::vector<ForecastResult> run_forecaster_cv(Method method, const TimeSeriesFrame& frame,
                                              const std::vector<std::string>& series,
                                              const ExogenousSource* nwp, const FoldPlan& plan,
                                              const ForecastSettings& settings, const ModelSink& sink) {
  std::vector<ForecastResult> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.push_back(forecast_series_cv(method, frame, series[i], nwp, plan, settings, static_cast<int>(i), sink));
  }
  return out;
}

}  // namespace gridbench
