#include "gridbench/pipeline.hpp"

#include <fstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "gridbench/archive.hpp"
#include "gridbench/csv.hpp"
#include "gridbench/digest.hpp"
#include "gridbench/parallel.hpp"
#include "gridbench/report.hpp"

namespace gridbench {

using nlohmann::json;

json RunManifest::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"name", s.name},
                           {"seconds", s.seconds},
                           {"input_digest", s.input_digest},
                           {"output_digest", s.output_digest},
                           {"cached", s.cached}});
  }
  json j{{"config_hash", config_hash}, {"version", version}, {"status", status}, {"stages", stages_json}};
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  return j;
}

std::string ReconcileVariant::name() const {
  if (!covariance) return std::string(to_string(method));
  return fmt::format("{}_{}", to_string(method), to_string(*covariance));
}

std::vector<ReconcileVariant> reconcile_variants(const ReconciliationConfig& config) {
  std::vector<ReconcileVariant> out;
  for (ReconcileMethod m : config.methods) {
    if (m == ReconcileMethod::ols) {
      out.push_back({m, std::nullopt});
    } else {
      for (CovarianceMethod c : config.covariance) out.push_back({m, c});
    }
  }
  return out;
}

std::string forecasts_digest(const std::vector<ForecastResult>& results) {
  std::string text;
  for (const auto& r : results) {
    text += r.series;
    for (const auto& f : r.folds) {
      text += matrix_digest(f.point);
      text += matrix_digest(f.residuals);
      for (const auto& q : f.quantiles) text += matrix_digest(q);
    }
  }
  return sha256_hex(text);
}

namespace {

void check_aligned(const std::vector<ForecastResult>& base, const Hierarchy& hierarchy) {
  if (static_cast<Index>(base.size()) != hierarchy.size()) {
    throw DataError(fmt::format("{} base forecasts for a hierarchy of {} series", base.size(), hierarchy.size()));
  }
  for (std::size_t s = 0; s < base.size(); ++s) {
    if (base[s].series != hierarchy.names[s]) {
      throw DataError(fmt::format("base forecast {} is not hierarchy series {}", base[s].series, hierarchy.names[s]));
    }
    if (base[s].folds.size() != base[0].folds.size() || base[s].horizon != base[0].horizon) {
      throw DataError("base forecasts differ in fold count or horizon");
    }
    for (std::size_t f = 0; f < base[s].folds.size(); ++f) {
      if (base[s].folds[f].test_rows != base[0].folds[f].test_rows ||
          base[s].folds[f].residual_rows != base[0].folds[f].residual_rows) {
        throw DataError(fmt::format("series {} fold {} rows differ from the top series", base[s].series, f));
      }
    }
  }
}

/// Samples x series matrix of step-ahead `h` (0-based) residuals of one fold.
Matrix residual_samples(const std::vector<ForecastResult>& base, std::size_t fold, Index h) {
  const Index rows = base[0].folds[fold].residuals.rows();
  Matrix out(rows, static_cast<Index>(base.size()));
  for (std::size_t s = 0; s < base.size(); ++s) out.col(static_cast<Index>(s)) = base[s].folds[fold].residuals.col(h);
  return out;
}

Matrix pooled_samples(const std::vector<ForecastResult>& base, Index h) {
  Index rows = 0;
  for (const auto& f : base[0].folds) rows += f.residuals.rows();
  Matrix out(rows, static_cast<Index>(base.size()));
  Index at = 0;
  for (std::size_t f = 0; f < base[0].folds.size(); ++f) {
    const Matrix block = residual_samples(base, f, h);
    out.middleRows(at, block.rows()) = block;
    at += block.rows();
  }
  return out;
}

}  // namespace

ReconciledRun reconcile_forecasts(const std::vector<ForecastResult>& base, const Hierarchy& hierarchy,
                                  const ReconcileVariant& variant, const ReconciliationConfig& config,
                                  int steps_per_day) {
  check_aligned(base, hierarchy);
  ReconciledRun run;
  run.variant = variant;
  const std::size_t folds = base[0].folds.size();
  const int horizon = base[0].horizon;
  const auto n = static_cast<Index>(base.size());
  const bool per_horizon = config.horizon == CovarianceHorizon::per_horizon;
  const bool pooled = config.scope == CovarianceScope::pooled;

  auto build = [&](const Matrix& samples, const json& where) {
    if (variant.method == ReconcileMethod::ols) return ols_operator(hierarchy);
    const CovarianceEstimate w = estimate_covariance(samples, *variant.covariance, config.glasso);
    json d = where;
    d["regularization"] = w.regularization;
    d["jitter"] = w.jitter;
    run.diagnostics.push_back(d);
    return variant.method == ReconcileMethod::mint
               ? mint_operator(hierarchy, w.W)
               : bayes_operator(hierarchy, w.W, config.bayes_cross_covariance);
  };

  // Operator table indexed [fold or 0][step ahead or 0].
  std::vector<std::vector<ReconciliationOperator>> ops;
  const std::size_t op_folds = pooled ? 1 : folds;
  const int op_steps = per_horizon ? horizon : 1;
  for (std::size_t f = 0; f < op_folds; ++f) {
    std::vector<ReconciliationOperator> row;
    for (int h = 0; h < op_steps; ++h) {
      const json where{{"fold", pooled ? json("pooled") : json(f)}, {"step_ahead", h + 1}};
      row.push_back(build(pooled ? pooled_samples(base, h) : residual_samples(base, f, h), where));
    }
    ops.push_back(std::move(row));
  }
  for (const auto& row : ops) run.operators.push_back(row.front());

  run.results = base;
  for (std::size_t f = 0; f < folds; ++f) {
    const auto& fold_ops = ops[pooled ? 0 : f];
    for (int h = 0; h < horizon; ++h) {
      const Matrix P = fold_ops[per_horizon ? static_cast<std::size_t>(h) : 0].projection();
      const Index test = base[0].folds[f].point.rows();
      const Index kept = base[0].folds[f].residuals.rows();
      Matrix points(test, n);
      Matrix residuals(kept, n);
      for (Index s = 0; s < n; ++s) {
        points.col(s) = base[static_cast<std::size_t>(s)].folds[f].point.col(h);
        residuals.col(s) = base[static_cast<std::size_t>(s)].folds[f].residuals.col(h);
      }
      const Matrix rp = points * P.transpose();
      const Matrix rr = residuals * P.transpose();
      for (Index s = 0; s < n; ++s) {
        auto& out = run.results[static_cast<std::size_t>(s)].folds[f];
        out.point.col(h) = rp.col(s);
        out.residuals.col(h) = rr.col(s);
      }
    }
    for (auto& r : run.results) {
      auto& out = r.folds[f];
      const ErrorBank bank = error_bank_from_residuals(out.residual_step_of_day, out.residuals, steps_per_day);
      for (Index i = 0; i < out.point.rows(); ++i) {
        out.quantiles[static_cast<std::size_t>(i)] =
            reconcile_quantiles(bank, r.grid, out.point.row(i).transpose(), out.issue_step_of_day[static_cast<std::size_t>(i)]);
      }
    }
  }
  return run;
}

Benchmark::Benchmark(BenchmarkConfig config) : config_(std::move(config)) {
  config_.validate();
  config_.forecast.embedding = config_.embedding;
  config_.forecast.seed = config_.seed;
  config_.forecast.workers = config_.workers == 0 ? default_worker_count() : config_.workers;
  config_.data.synthetic.seed = config_.seed;
  manifest_.config_hash = config_hash(config_);
}

template <class Fn>
auto Benchmark::stage(const std::string& name, Fn&& fn) {
  StageRecord rec;
  rec.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  auto fail = [&](const char* what) {
    manifest_.status = "failed";
    manifest_.failed_stage = name;
    manifest_.error = what;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.stages.push_back(rec);
    try {
      write_manifest();
    } catch (const std::exception& e) {
      spdlog::error("could not write the partial manifest: {}", e.what());
    }
    return fmt::format("stage {}: {}", name, what);
  };
  spdlog::info("stage {}", name);
  try {
    auto result = fn(rec);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.stages.push_back(rec);
    return result;
  } catch (const ConfigError& e) {
    throw ConfigError(fail(e.what()));
  } catch (const DataError& e) {
    throw DataError(fail(e.what()));
  } catch (const NumericError& e) {
    throw NumericError(fail(e.what()));
  } catch (const std::exception& e) {
    throw Error(fail(e.what()));
  }
}

const PreparedData& Benchmark::data() {
  if (data_) return *data_;
  data_ = stage("data", [&](StageRecord& rec) {
    PreparedData out;
    TimeSeriesFrame bottom;
    if (config_.data.source == DataSource::synthetic) {
      rec.input_digest = sha256_hex(to_json(config_).at("data").dump() + std::to_string(config_.seed));
      SyntheticData syn = generate_synthetic(config_.data.synthetic);
      bottom = std::move(syn.loads);
      out.nwp_table = std::move(syn.nwp);
    } else {
      const auto& ds = config_.data.dataset;
      rec.input_digest = sha256_file(ds.loads_csv);
      const WideTable table = read_wide_csv(ds.loads_csv);
      RawMeterTable raw = RawMeterTable::from_wide(table, kDefaultStepSeconds);
      if (!ds.meters.empty()) {
        RawMeterTable subset = raw;
        subset.ids = ds.meters;
        subset.values.resize(raw.size(), static_cast<Index>(ds.meters.size()));
        for (std::size_t i = 0; i < ds.meters.size(); ++i) {
          subset.values.col(static_cast<Index>(i)) = raw.values.col(raw.meter_index(ds.meters[i]));
        }
        raw = std::move(subset);
      }
      auto [frame, report] = clean_meters(raw, ds.cleaning);
      bottom = std::move(frame);
      out.cleaning = std::move(report);
      if (!ds.nwp_csv.empty()) {
        rec.input_digest = sha256_hex(rec.input_digest + sha256_file(ds.nwp_csv));
        out.nwp_table = NwpTable::from_csv(ds.nwp_csv);
      }
    }
    if (!bottom.starts_at_midnight()) throw DataError("the load frame must start at local midnight");
    const Index whole = static_cast<Index>(bottom.whole_days()) * bottom.steps_per_day();
    if (whole < bottom.size()) bottom = bottom.slice(0, whole);

    out.hierarchy = build_summation_matrix(static_cast<int>(bottom.column_count()), config_.hierarchy_groups,
                                           bottom.names());
    TimeSeriesFrame frame(bottom.start(), bottom.step_seconds(), out.hierarchy.names,
                          aggregate_bottom(bottom.values(), out.hierarchy), bottom.utc_offset_minutes());
    frame.set_holidays(bottom.holidays());
    out.frame = std::move(frame);
    if (out.nwp_table) out.nwp = std::make_shared<const AlignedNwp>(*out.nwp_table);
    rec.output_digest = matrix_digest(out.frame.values());
    spdlog::info("{} series over {} days", out.hierarchy.size(), out.frame.whole_days());
    return out;
  });
  return *data_;
}

const FoldPlan& Benchmark::plan() {
  if (plan_) return *plan_;
  const PreparedData& d = data();
  plan_ = stage("folds", [&](StageRecord& rec) {
    rec.input_digest = matrix_digest(d.frame.values());
    FoldPlan p = build_folds(d.frame.whole_days(), config_.embedding, config_.folds, d.frame.steps_per_day());
    std::string text;
    for (const auto& f : p.folds) {
      text += fmt::format("{}|{}|", f.train_rows.size(), f.test_rows.size());
      for (Index r : f.test_rows) text += std::to_string(r) + ",";
    }
    rec.output_digest = sha256_hex(text);
    return p;
  });
  return *plan_;
}

std::vector<Method> Benchmark::evaluated_methods() const {
  std::vector<Method> out{Method::persistence};
  for (Method m : config_.forecasters)
    if (m != Method::persistence) out.push_back(m);
  return out;
}

const std::vector<ForecastResult>& Benchmark::base(Method method) {
  if (auto it = base_.find(method); it != base_.end()) return it->second;
  const PreparedData& d = data();
  const FoldPlan& p = plan();
  auto results = stage(fmt::format("forecast:{}", to_string(method)), [&](StageRecord& rec) {
    const std::string key = forecast_stage_hash(config_, method);
    rec.input_digest = key;
    const auto path = config_.output / "cache" / fmt::format("forecast_{}.bin", to_string(method));
    if (config_.cache) {
      if (auto cached = load_forecasts(path, key)) {
        spdlog::info("reusing cached {} forecasts", to_string(method));
        rec.cached = true;
        rec.output_digest = forecasts_digest(*cached);
        return std::move(*cached);
      }
    }
    std::vector<ForecastResult> r =
        run_forecaster_cv(method, d.frame, d.hierarchy.names, d.nwp.get(), p, config_.forecast);
    if (config_.cache) save_forecasts(path, key, r);
    rec.output_digest = forecasts_digest(r);
    return r;
  });
  return base_.emplace(method, std::move(results)).first->second;
}

const std::vector<ReconciledRun>& Benchmark::reconciled() {
  if (reconciled_) return *reconciled_;
  const PreparedData& d = data();
  const auto& b = base(config_.reconciliation.forecaster);
  reconciled_ = stage("reconcile", [&](StageRecord& rec) {
    rec.input_digest = forecasts_digest(b);
    std::vector<ReconciledRun> runs;
    std::string digests;
    for (const auto& v : reconcile_variants(config_.reconciliation)) {
      spdlog::info("reconciling with {}", v.name());
      runs.push_back(reconcile_forecasts(b, d.hierarchy, v, config_.reconciliation, d.frame.steps_per_day()));
      digests += forecasts_digest(runs.back().results);
    }
    rec.output_digest = sha256_hex(digests);
    return runs;
  });
  return *reconciled_;
}

const MethodEvaluation& Benchmark::evaluation(Method method) {
  if (auto it = evaluations_.find(method); it != evaluations_.end()) return it->second;
  const PreparedData& d = data();
  const auto& results = base(method);
  MethodEvaluation eval = evaluate_forecasts(std::string(to_string(method)), results, config_.folds,
                                             d.frame.steps_per_day(), config_.evaluation.mape_floor);
  if (method != Method::persistence) normalize_against(eval, evaluation(Method::persistence));
  else normalize_against(eval, eval);
  return evaluations_.emplace(method, std::move(eval)).first->second;
}

std::vector<MethodEvaluation> Benchmark::reconciled_evaluations() {
  if (reconciled_evaluations_) return *reconciled_evaluations_;
  const PreparedData& d = data();
  const MethodEvaluation& persistence = evaluation(Method::persistence);
  std::vector<MethodEvaluation> out;
  for (const auto& run : reconciled()) {
    MethodEvaluation eval = evaluate_forecasts(run.variant.name(), run.results, config_.folds,
                                               d.frame.steps_per_day(), config_.evaluation.mape_floor);
    normalize_against(eval, persistence);
    out.push_back(std::move(eval));
  }
  reconciled_evaluations_ = out;
  return out;
}

const json& Benchmark::summary() {
  if (summary_) return *summary_;
  const PreparedData& d = data();
  SummaryInputs in;
  for (Method m : evaluated_methods()) in.forecasters.push_back(evaluation(m));
  const bool reconcile = !config_.reconciliation.methods.empty();
  if (reconcile) {
    in.reconciliation_base = std::string(to_string(config_.reconciliation.forecaster));
    in.reconciled = reconciled_evaluations();
    for (const auto& run : reconciled()) in.reconciliation_diagnostics[run.variant.name()] = run.diagnostics;
  }
  summary_ = stage("evaluate", [&](StageRecord& rec) {
    std::string inputs;
    for (const auto& [m, r] : base_) inputs += forecasts_digest(r);
    rec.input_digest = sha256_hex(inputs);
    in.config_hash = manifest_.config_hash;
    in.hierarchy = &d.hierarchy;
    in.steps_per_day = d.frame.steps_per_day();
    in.horizon = config_.embedding.horizon;
    in.alphas = config_.forecast.grid.alphas();
    if (reconcile) {
      in.effects = compare_reconciliation(evaluation(config_.reconciliation.forecaster), in.reconciled,
                                          d.hierarchy, config_.evaluation.reduction_bin);
    }
    json s = build_summary(in);
    rec.output_digest = sha256_hex(dump_summary(s));
    return s;
  });
  return *summary_;
}

void Benchmark::write_synthetic_inputs(const std::filesystem::path& directory) {
  if (config_.data.source != DataSource::synthetic) throw ConfigError("synth needs a synthetic data source");
  stage("synth", [&](StageRecord& rec) {
    rec.input_digest = sha256_hex(to_json(config_).at("data").dump() + std::to_string(config_.seed));
    const SyntheticData syn = generate_synthetic(config_.data.synthetic);
    std::filesystem::create_directories(directory);
    std::vector<Timestamp> ts(static_cast<std::size_t>(syn.loads.size()));
    for (Index i = 0; i < syn.loads.size(); ++i) ts[static_cast<std::size_t>(i)] = syn.loads.timestamp(i);
    write_wide_csv(directory / "loads.csv", "timestamp", syn.loads.names(), ts, syn.loads.values());
    write_wide_csv(directory / "weather.csv", "timestamp", syn.weather.names(), ts, syn.weather.values());
    syn.nwp.write_csv(directory / "nwp.csv");
    rec.output_digest = sha256_hex(sha256_file(directory / "loads.csv") + sha256_file(directory / "nwp.csv"));
    return true;
  });
}

void Benchmark::write_ingest_outputs() {
  const PreparedData& d = data();
  const auto dir = config_.output / "data";
  std::filesystem::create_directories(dir);
  std::vector<Timestamp> ts(static_cast<std::size_t>(d.frame.size()));
  for (Index i = 0; i < d.frame.size(); ++i) ts[static_cast<std::size_t>(i)] = d.frame.timestamp(i);
  write_wide_csv(dir / "series.csv", "timestamp", d.frame.names(), ts, d.frame.values());
  {
    std::ofstream out(dir / "summation.csv");
    out << "series";
    for (Index b = d.hierarchy.n_upper(); b < d.hierarchy.size(); ++b) out << ',' << d.hierarchy.names[static_cast<std::size_t>(b)];
    out << '\n';
    for (Index r = 0; r < d.hierarchy.size(); ++r) {
      out << d.hierarchy.names[static_cast<std::size_t>(r)];
      for (Index c = 0; c < d.hierarchy.summation.cols(); ++c) out << ',' << d.hierarchy.summation(r, c);
      out << '\n';
    }
  }
  if (d.cleaning) {
    std::ofstream out(dir / "cleaning_report.json");
    out << d.cleaning->to_json().dump(1) << '\n';
  }
}

namespace {

void write_points(const std::filesystem::path& path, const std::vector<ForecastResult>& results,
                  const TimeSeriesFrame& frame) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  const int horizon = results.empty() ? 0 : results.front().horizon;
  out << "series,fold,issue_time,kind";
  for (int h = 1; h <= horizon; ++h) out << ",h" << h;
  out << '\n';
  for (const auto& r : results) {
    for (const auto& f : r.folds) {
      for (Index i = 0; i < f.point.rows(); ++i) {
        const std::string issue = format_iso8601(frame.timestamp(f.issue_index[static_cast<std::size_t>(i)]));
        for (const char* kind : {"point", "actual"}) {
          const Matrix& m = kind[0] == 'p' ? f.point : f.actual;
          out << r.series << ',' << f.fold << ',' << issue << ',' << kind;
          for (Index h = 0; h < m.cols(); ++h) out << ',' << fmt::format("{:.17g}", m(i, h));
          out << '\n';
        }
      }
    }
  }
}

}  // namespace

void Benchmark::write_forecast_outputs() {
  for (Method m : evaluated_methods()) {
    write_points(config_.output / "forecasts" / fmt::format("{}.csv", to_string(m)), base(m), data().frame);
  }
}

void Benchmark::write_reconcile_outputs() {
  const PreparedData& d = data();
  for (const auto& run : reconciled()) {
    const auto dir = config_.output / "reconciliation" / run.variant.name();
    std::filesystem::create_directories(dir);
    write_operator_csv(run.operators.front(), d.hierarchy.names, dir);
    write_points(dir / "forecasts.csv", run.results, d.frame);
    std::ofstream out(dir / "diagnostics.json");
    out << run.diagnostics.dump(1) << '\n';
  }
}

void Benchmark::write_evaluation_outputs() {
  const json& s = summary();
  auto write_maps = [&](const MethodEvaluation& eval, const std::filesystem::path& dir) {
    for (const auto& sc : eval.series) {
      write_kpi_csv(sc.rmse, dir / fmt::format("{}_rmse.csv", sc.series));
      write_kpi_csv(sc.mape, dir / fmt::format("{}_mape.csv", sc.series));
      if (sc.nrmse) write_kpi_csv(*sc.nrmse, dir / fmt::format("{}_nrmse.csv", sc.series));
      if (sc.nmape) write_kpi_csv(*sc.nmape, dir / fmt::format("{}_nmape.csv", sc.series));
    }
  };
  for (Method m : evaluated_methods()) write_maps(evaluation(m), config_.output / "kpi" / std::string(to_string(m)));
  if (!config_.reconciliation.methods.empty()) {
    for (const auto& eval : reconciled_evaluations()) write_maps(eval, config_.output / "kpi" / eval.name);
  }
  std::filesystem::create_directories(config_.output);
  std::ofstream out(config_.output / "summary.json", std::ios::binary);
  out << dump_summary(s);
}

void Benchmark::write_manifest() const {
  std::filesystem::create_directories(config_.output);
  std::ofstream out(config_.output / "manifest.json");
  out << manifest_.to_json().dump(1) << '\n';
}

}  // namespace gridbench

namespace gridbench {

void Benchmark::complete() {
  manifest_.status = "ok";
  write_manifest();
}

}  // namespace gridbench
