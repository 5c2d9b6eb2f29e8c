#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridbench/cleaning.hpp"
#include "gridbench/covariance.hpp"
#include "gridbench/cv.hpp"
#include "gridbench/reconcile.hpp"
#include "gridbench/synthetic.hpp"

namespace gridbench {

enum class DataSource { synthetic, dataset };

struct DatasetConfig {
  std::filesystem::path loads_csv;
  std::filesystem::path nwp_csv;
  /// Meter ids to use as bottom series; empty keeps every retained meter.
  std::vector<std::string> meters;
  CleaningOptions cleaning;
};

struct DataConfig {
  DataSource source = DataSource::synthetic;
  SyntheticSpec synthetic;
  DatasetConfig dataset;
};

enum class CovarianceScope { per_fold, pooled };
enum class CovarianceHorizon { lead_one, per_horizon };

struct ReconciliationConfig {
  Method forecaster = Method::boosted_trees;
  std::vector<ReconcileMethod> methods{ReconcileMethod::ols, ReconcileMethod::mint, ReconcileMethod::bayes};
  std::vector<CovarianceMethod> covariance{CovarianceMethod::ledoit_wolf, CovarianceMethod::graphical_lasso};
  GraphicalLassoOptions glasso;
  CovarianceScope scope = CovarianceScope::per_fold;
  CovarianceHorizon horizon = CovarianceHorizon::lead_one;
  bool bayes_cross_covariance = false;
};

struct EvaluationConfig {
  double mape_floor = 0.1;
  /// Steps ahead per bin of the relative RMSE reduction tables (4 h).
  int reduction_bin = 24;
};

/// Complete benchmark configuration. Defaults: h = e = 144, k = 10 folds,
/// an 11-level quantile grid, ARMA orders (6, 5), daily and weekly seasonal
/// periods and the 24-node hierarchy with 2 and 4 intermediate groups.
struct BenchmarkConfig {
  DataConfig data;
  std::vector<int> hierarchy_groups{2, 4};
  EmbeddingSpec embedding;
  int folds = 10;
  std::vector<Method> forecasters{Method::holt_winters, Method::armax, Method::knn, Method::boosted_trees};
  ForecastSettings forecast;
  ReconciliationConfig reconciliation;
  EvaluationConfig evaluation;
  std::uint64_t seed = 1;
  std::filesystem::path output = "gridbench-out";
  int workers = 1;
  bool cache = true;

  BenchmarkConfig();
  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Parses a config document. Missing keys take their defaults; unknown keys
/// are rejected.
BenchmarkConfig config_from_json(const nlohmann::json& doc);
BenchmarkConfig load_config(const std::filesystem::path& path);
/// Every field, defaults included.
nlohmann::json to_json(const BenchmarkConfig& config);

/// Hash of everything that affects results (output location, worker count
/// and caching excluded).
std::string config_hash(const BenchmarkConfig& config);
/// Hash of the inputs of one forecaster's cross-validation stage.
std::string forecast_stage_hash(const BenchmarkConfig& config, Method method);

}  // namespace gridbench
