#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridbench/compare.hpp"

namespace gridbench {

struct SummaryInputs {
  std::string config_hash;
  const Hierarchy* hierarchy = nullptr;
  int steps_per_day = 0;
  int horizon = 0;
  std::vector<double> alphas;
  /// Forecaster scores, persistence included, normalized.
  std::vector<MethodEvaluation> forecasters;
  std::string reconciliation_base;
  std::vector<MethodEvaluation> reconciled;
  std::vector<ReconciliationEffect> effects;
  nlohmann::json reconciliation_diagnostics = nlohmann::json::object();
};

/// Machine-readable summary. Contains no timings or paths, so identical
/// inputs give byte-identical dumps.
nlohmann::json build_summary(const SummaryInputs& in);
std::string dump_summary(const nlohmann::json& summary);

/// Plot data (x/y columns), computed from the summary alone.
/// Returns the files written.
std::vector<std::filesystem::path> write_plot_data(const nlohmann::json& summary,
                                                   const std::filesystem::path& directory);

/// step_of_day rows x step-ahead columns; missing cells are empty.
void write_kpi_csv(const KpiMatrix& map, const std::filesystem::path& path);

}  // namespace gridbench
