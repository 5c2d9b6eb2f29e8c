// Command-line driver of the benchmark pipeline.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gridbench/pipeline.hpp"
#include "gridbench/report.hpp"

using namespace gridbench;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::optional<int> workers;
  bool no_cache = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file (defaults when omitted)");
  cmd->add_option("-s,--seed", o.seed, "Override the run seed");
  cmd->add_option("-o,--output", o.output, "Override the output directory");
  cmd->add_option("-w,--workers", o.workers, "Worker threads (0 = all cores)");
  cmd->add_flag("--no-cache", o.no_cache, "Ignore and do not write cached base forecasts");
  cmd->add_flag("-v,--verbose", o.verbose, "Debug logging");
}

BenchmarkConfig resolve(const CommonOptions& o) {
  BenchmarkConfig c = o.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.output.empty()) c.output = o.output;
  if (o.workers) c.workers = *o.workers;
  if (o.no_cache) c.cache = false;
  return c;
}

nlohmann::json read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

int run(const std::string& command, const CommonOptions& o, const std::string& synth_dir) {
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);
  Benchmark bench(resolve(o));
  const auto& out = bench.config().output;
  if (command == "synth") {
    bench.write_synthetic_inputs(synth_dir.empty() ? out / "synthetic" : std::filesystem::path(synth_dir));
  } else if (command == "ingest") {
    bench.write_ingest_outputs();
  } else if (command == "forecast") {
    bench.write_forecast_outputs();
  } else if (command == "reconcile") {
    bench.write_reconcile_outputs();
  } else if (command == "evaluate") {
    bench.write_evaluation_outputs();
  } else if (command == "report") {
    const auto path = out / "summary.json";
    if (!std::filesystem::exists(path)) bench.write_evaluation_outputs();
    for (const auto& f : write_plot_data(read_summary(path), out / "plots")) spdlog::info("wrote {}", f.string());
  } else if (command == "all") {
    bench.write_ingest_outputs();
    bench.write_forecast_outputs();
    if (!bench.config().reconciliation.methods.empty()) bench.write_reconcile_outputs();
    bench.write_evaluation_outputs();
    write_plot_data(read_summary(out / "summary.json"), out / "plots");
    std::cout << bench.summary().at("summary_table").dump(1) << '\n';
  }
  bench.complete();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical probabilistic load-forecasting benchmark"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the default configuration and exit");

  CommonOptions options;
  std::string synth_dir;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "Generate the synthetic data set as CSV"},
      {"ingest", "Load or synthesize data and build the hierarchy"},
      {"forecast", "Cross-validate the configured forecasters"},
      {"reconcile", "Reconcile the base forecasts"},
      {"evaluate", "Compute KPI maps and the JSON summary"},
      {"report", "Write figure-analog plot data from the summary"},
      {"all", "Run every stage"}};
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, options);
    if (name == "synth") cmd->add_option("--dir", synth_dir, "Directory for the CSV files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (print_config) {
      std::cout << to_json(config_from_json(nlohmann::json::object())).dump(2) << '\n';
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kConfig;
    }
    return run(app.get_subcommands().front()->get_name(), options, synth_dir);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kNumeric;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
}
