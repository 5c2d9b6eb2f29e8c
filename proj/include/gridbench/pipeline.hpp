#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridbench/compare.hpp"
#include "gridbench/config.hpp"
#include "gridbench/nwp.hpp"

namespace gridbench {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Series of the whole hierarchy on one time axis, plus the weather source.
struct PreparedData {
  Hierarchy hierarchy;
  TimeSeriesFrame frame;  // columns in hierarchy order
  std::optional<NwpTable> nwp_table;
  std::shared_ptr<const AlignedNwp> nwp;
  std::optional<CleaningReport> cleaning;
};

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::string input_digest;
  std::string output_digest;
  bool cached = false;
};

struct RunManifest {
  std::string config_hash;
  std::string version = kArtifactVersion;
  std::vector<StageRecord> stages;
  std::string status = "running";
  std::string failed_stage;
  std::string error;

  nlohmann::json to_json() const;
};

/// One reconciliation variant: a method and, except for OLS, a covariance
/// estimator.
struct ReconcileVariant {
  ReconcileMethod method = ReconcileMethod::ols;
  std::optional<CovarianceMethod> covariance;

  std::string name() const;
};

std::vector<ReconcileVariant> reconcile_variants(const ReconciliationConfig& config);

struct ReconciledRun {
  ReconcileVariant variant;
  std::vector<ForecastResult> results;  // hierarchy order, same rows as the base
  /// Per operator (fold, or pooled): shrinkage / penalty and jitter.
  nlohmann::json diagnostics = nlohmann::json::array();
  /// Operators by fold for lead-one W (a single entry when pooled).
  std::vector<ReconciliationOperator> operators;
};

/// Reconciles cross-validated base forecasts of every hierarchy series.
/// W comes from the kept training residuals of each fold (or all folds
/// pooled), at step ahead 1 or separately per step ahead.
ReconciledRun reconcile_forecasts(const std::vector<ForecastResult>& base, const Hierarchy& hierarchy,
                                  const ReconcileVariant& variant, const ReconciliationConfig& config,
                                  int steps_per_day);

/// Stage-by-stage driver. Every stage runs its prerequisites on demand and
/// memoizes its result; base forecasts are cached on disk under the output
/// directory, keyed by the hash of their inputs.
class Benchmark {
 public:
  explicit Benchmark(BenchmarkConfig config);

  const BenchmarkConfig& config() const { return config_; }
  const RunManifest& manifest() const { return manifest_; }

  const PreparedData& data();
  const FoldPlan& plan();
  const std::vector<ForecastResult>& base(Method method);
  const std::vector<ReconciledRun>& reconciled();
  /// The deterministic JSON summary (no timings).
  const nlohmann::json& summary();

  /// Writes the synthetic source data as CSV (synthetic configs only).
  void write_synthetic_inputs(const std::filesystem::path& directory);
  /// Writes the prepared frame, S and the cleaning report.
  void write_ingest_outputs();
  void write_forecast_outputs();
  void write_reconcile_outputs();
  /// Writes KPI maps as CSV and summary.json.
  void write_evaluation_outputs();
  void write_manifest() const;
  /// Marks the run successful and writes the manifest.
  void complete();

  /// Methods evaluated: the configured forecasters plus persistence.
  std::vector<Method> evaluated_methods() const;

 private:
  template <class Fn>
  auto stage(const std::string& name, Fn&& fn);

  const MethodEvaluation& evaluation(Method method);
  std::vector<MethodEvaluation> reconciled_evaluations();

  BenchmarkConfig config_;
  RunManifest manifest_;
  std::optional<PreparedData> data_;
  std::optional<FoldPlan> plan_;
  std::map<Method, std::vector<ForecastResult>> base_;
  std::map<Method, MethodEvaluation> evaluations_;
  std::optional<std::vector<ReconciledRun>> reconciled_;
  std::optional<std::vector<MethodEvaluation>> reconciled_evaluations_;
  std::optional<nlohmann::json> summary_;
};

/// Digest of the numeric content of a forecast set.
std::string forecasts_digest(const std::vector<ForecastResult>& results);

}  // namespace gridbench
