#include "gridbench/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <spdlog/fmt/fmt.h>

#include "gridbench/digest.hpp"
#include "gridbench/parallel.hpp"

namespace gridbench {

using nlohmann::json;

namespace {

std::string_view to_string(DataSource s) { return s == DataSource::synthetic ? "synthetic" : "dataset"; }
std::string_view to_string(CovarianceScope s) { return s == CovarianceScope::per_fold ? "per_fold" : "pooled"; }
std::string_view to_string(CovarianceHorizon h) {
  return h == CovarianceHorizon::lead_one ? "lead_one" : "per_horizon";
}

/// Reads one JSON object, remembering which keys were consumed so that the
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{} has the wrong type", label(), key));
    }
  }

  /// Calls fn(Section) when `key` is present.
  template <class Fn>
  void section(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Section s(j_.at(key), path_.empty() ? key : path_ + "." + key);
    fn(s);
    s.finish();
  }


  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(fmt::format("unknown key {}.{}", label(), key));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T, class Parse>
std::vector<T> parse_list(const std::vector<std::string>& names, Parse parse) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

template <class T>
std::vector<std::string> name_list(const std::vector<T>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) out.emplace_back(to_string(v));
  return out;
}

std::string format_date(LocalDay day) { return format_iso8601(day * kSecondsPerDay).substr(0, 10); }

void read_synthetic(Section& s, SyntheticSpec& spec) {
  s.read("n_bottom", spec.n_bottom);
  s.read("days", spec.days);
  s.read("noise", spec.noise);
  s.read("mean_kw", spec.mean_kw);
  s.read("utc_offset_minutes", spec.utc_offset_minutes);
  std::string start;
  s.read("start", start);
  if (!start.empty()) spec.start = parse_iso8601(start);
}

void read_dataset(Section& s, DatasetConfig& d) {
  std::string loads, nwp;
  s.read("loads_csv", loads);
  s.read("nwp_csv", nwp);
  if (!loads.empty()) d.loads_csv = loads;
  if (!nwp.empty()) d.nwp_csv = nwp;
  s.read("meters", d.meters);
  int min_span_days = static_cast<int>(d.cleaning.min_span_seconds / kSecondsPerDay);
  s.read("min_span_days", min_span_days);
  d.cleaning.min_span_seconds = static_cast<std::int64_t>(min_span_days) * kSecondsPerDay;
  s.read("max_gap", d.cleaning.max_gap);
  s.read("utc_offset_minutes", d.cleaning.utc_offset_minutes);
  std::vector<std::string> holidays;
  s.read("holidays", holidays);
  for (const auto& h : holidays) d.cleaning.holidays.insert(parse_date(h));
}

}  // namespace

BenchmarkConfig::BenchmarkConfig() {
  embedding.nwp = {"T", "GHI"};
  forecast.embedding = embedding;
}

void BenchmarkConfig::validate() const {
  embedding.validate();
  if (folds < 1) throw ConfigError("folds.k must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (forecasters.empty()) throw ConfigError("at least one forecaster is required");
  if (data.source == DataSource::synthetic) {
    if (data.synthetic.n_bottom < 2) throw ConfigError("synthetic n_bottom must be >= 2");
    if (data.synthetic.days < 1) throw ConfigError("synthetic days must be >= 1");
    if (!(data.synthetic.noise >= 0.0)) throw ConfigError("synthetic noise must be >= 0");
  } else if (data.dataset.loads_csv.empty()) {
    throw ConfigError("data.dataset.loads_csv is required for the dataset source");
  }
  if (data.dataset.cleaning.max_gap < 0) throw ConfigError("max_gap must be >= 0");
  if (forecast.residual_stride < 1) throw ConfigError("residual_stride must be >= 1");
  if (forecast.knn.k < 1) throw ConfigError("knn.k must be >= 1");
  if (forecast.hw.samples < 1) throw ConfigError("holt_winters.samples must be >= 1");
  if (forecast.armax.ar < 0 || forecast.armax.ma < 0 || forecast.armax.long_ar < 1) {
    throw ConfigError("invalid ARMAX orders");
  }
  const auto& t = forecast.trees;
  if (t.trees < 0 || t.max_leaves < 2 || t.min_leaf < 1 || !(t.learning_rate > 0.0) || t.lambda < 0.0 ||
      t.max_bins < 2 || t.max_bins > 256 || t.row_stride < 1 || !(t.row_subsample > 0.0 && t.row_subsample <= 1.0) ||
      !(t.col_subsample > 0.0 && t.col_subsample <= 1.0)) {
    throw ConfigError("invalid boosted_trees options");
  }
  if (reconciliation.forecaster != Method::persistence) {
    if (std::find(forecasters.begin(), forecasters.end(), reconciliation.forecaster) == forecasters.end()) {
      throw ConfigError(fmt::format("reconciliation forecaster {} is not among the forecasters",
                                    to_string(reconciliation.forecaster)));
    }
  }
  const bool needs_w = std::any_of(reconciliation.methods.begin(), reconciliation.methods.end(),
                                   [](ReconcileMethod m) { return m != ReconcileMethod::ols; });
  if (needs_w && reconciliation.covariance.empty()) {
    throw ConfigError("minT and Bayes reconciliation need at least one covariance method");
  }
  if (reconciliation.glasso.max_sweeps < 1 || !(reconciliation.glasso.tolerance > 0.0)) {
    throw ConfigError("invalid graphical lasso options");
  }
  if (!(evaluation.mape_floor >= 0.0)) throw ConfigError("mape_floor must be >= 0");
  if (evaluation.reduction_bin < 1) throw ConfigError("reduction_bin must be >= 1");
  for (int g : hierarchy_groups) {
    if (g < 2) throw ConfigError("hierarchy group counts must be >= 2");
  }
}

BenchmarkConfig config_from_json(const json& doc) {
  BenchmarkConfig c;
  Section root(doc, "");

  root.section("data", [&](Section& s) {
    std::string source{to_string(c.data.source)};
    s.read("source", source);
    if (source == "synthetic") {
      c.data.source = DataSource::synthetic;
    } else if (source == "dataset") {
      c.data.source = DataSource::dataset;
    } else {
      throw ConfigError(fmt::format("unknown data source '{}'", source));
    }
    s.section("synthetic", [&](Section& t) { read_synthetic(t, c.data.synthetic); });
    s.section("dataset", [&](Section& t) {
      read_dataset(t, c.data.dataset);
      c.data.dataset.cleaning.corrections.clear();
      json corrections = json::array();
      t.read("sign_corrections", corrections);
      for (const auto& item : corrections) {
        Section e(item, "data.dataset.sign_corrections[]");
        SignCorrection sc;
        std::string instant;
        e.read("meter", sc.meter);
        e.read("instant", instant);
        e.read("onward", sc.onward);
        e.finish();
        if (sc.meter.empty() || instant.empty()) throw ConfigError("sign corrections need a meter and an instant");
        sc.instant = parse_iso8601(instant);
        c.data.dataset.cleaning.corrections.push_back(sc);
      }
    });
  });

  root.section("hierarchy", [&](Section& s) { s.read("groups", c.hierarchy_groups); });

  root.section("embedding", [&](Section& s) {
    s.read("horizon", c.embedding.horizon);
    s.read("embed", c.embedding.embed);
    s.read("lagged", c.embedding.lagged);
    std::vector<std::string> calendar = name_list(c.embedding.calendar);
    s.read("calendar", calendar);
    c.embedding.calendar = parse_list<CalendarFeature>(calendar, calendar_feature_from_string);
    s.read("nwp", c.embedding.nwp);
  });

  root.section("folds", [&](Section& s) { s.read("k", c.folds); });

  root.section("forecasters", [&](Section& s) {
    std::vector<std::string> methods = name_list(c.forecasters);
    s.read("methods", methods);
    c.forecasters = parse_list<Method>(methods, method_from_string);
    auto& f = c.forecast;
    s.read("temperature", f.temperature);
    s.read("irradiance", f.irradiance);
    s.read("residual_stride", f.residual_stride);
    s.section("holt_winters", [&](Section& t) {
      t.read("samples", f.hw.samples);
      t.read("coarse_grid", f.hw.coarse_grid);
      t.read("refine_step", f.hw.refine_step);
      t.read("literal_s2_decay", f.hw_literal_s2_decay);
    });
    s.section("armax", [&](Section& t) {
      t.read("ar", f.armax.ar);
      t.read("ma", f.armax.ma);
      t.read("long_ar", f.armax.long_ar);
      t.read("daily_harmonics", f.armax_daily_harmonics);
      t.read("weekly_harmonics", f.armax_weekly_harmonics);
    });
    s.section("knn", [&](Section& t) { t.read("k", f.knn.k); });
    s.section("boosted_trees", [&](Section& t) {
      t.read("trees", f.trees.trees);
      t.read("max_leaves", f.trees.max_leaves);
      t.read("learning_rate", f.trees.learning_rate);
      t.read("min_leaf", f.trees.min_leaf);
      t.read("lambda", f.trees.lambda);
      t.read("max_bins", f.trees.max_bins);
      t.read("row_stride", f.trees.row_stride);
      t.read("row_subsample", f.trees.row_subsample);
      t.read("col_subsample", f.trees.col_subsample);
      t.read("cross_fit_residuals", f.cross_fit_residuals);
    });
  });

  root.section("reconciliation", [&](Section& s) {
    auto& r = c.reconciliation;
    std::string forecaster{to_string(r.forecaster)};
    s.read("forecaster", forecaster);
    r.forecaster = method_from_string(forecaster);
    std::vector<std::string> methods = name_list(r.methods);
    s.read("methods", methods);
    r.methods = parse_list<ReconcileMethod>(methods, reconcile_method_from_string);
    std::vector<std::string> covariance = name_list(r.covariance);
    s.read("covariance", covariance);
    r.covariance = parse_list<CovarianceMethod>(covariance, covariance_method_from_string);
    s.read("glasso_lambda", r.glasso.lambda);
    s.read("glasso_max_sweeps", r.glasso.max_sweeps);
    s.read("glasso_tolerance", r.glasso.tolerance);
    std::string scope{to_string(r.scope)};
    s.read("covariance_scope", scope);
    if (scope == "per_fold") {
      r.scope = CovarianceScope::per_fold;
    } else if (scope == "pooled") {
      r.scope = CovarianceScope::pooled;
    } else {
      throw ConfigError(fmt::format("unknown covariance_scope '{}'", scope));
    }
    std::string horizon{to_string(r.horizon)};
    s.read("covariance_horizon", horizon);
    if (horizon == "lead_one") {
      r.horizon = CovarianceHorizon::lead_one;
    } else if (horizon == "per_horizon") {
      r.horizon = CovarianceHorizon::per_horizon;
    } else {
      throw ConfigError(fmt::format("unknown covariance_horizon '{}'", horizon));
    }
    s.read("bayes_cross_covariance", r.bayes_cross_covariance);
  });

  root.section("evaluation", [&](Section& s) {
    std::vector<double> alphas = c.forecast.grid.alphas();
    s.read("quantiles", alphas);
    c.forecast.grid = QuantileGrid(alphas);
    s.read("mape_floor", c.evaluation.mape_floor);
    s.read("reduction_bin", c.evaluation.reduction_bin);
  });

  root.read("seed", c.seed);
  std::string output = c.output.string();
  root.read("output", output);
  c.output = output;
  root.read("workers", c.workers);
  root.read("cache", c.cache);
  root.finish();

  c.data.synthetic.seed = c.seed;
  c.forecast.embedding = c.embedding;
  c.forecast.seed = c.seed;
  c.forecast.workers = c.workers == 0 ? default_worker_count() : c.workers;
  c.validate();
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
  }
  return config_from_json(doc);
}

json to_json(const BenchmarkConfig& c) {
  json corrections = json::array();
  for (const auto& sc : c.data.dataset.cleaning.corrections) {
    corrections.push_back({{"meter", sc.meter}, {"instant", format_iso8601(sc.instant)}, {"onward", sc.onward}});
  }
  std::vector<std::string> holidays;
  for (LocalDay d : c.data.dataset.cleaning.holidays) holidays.push_back(format_date(d));
  const auto& f = c.forecast;
  const auto& r = c.reconciliation;
  return json{
      {"data",
       {{"source", to_string(c.data.source)},
        {"synthetic",
         {{"n_bottom", c.data.synthetic.n_bottom},
          {"days", c.data.synthetic.days},
          {"noise", c.data.synthetic.noise},
          {"mean_kw", c.data.synthetic.mean_kw},
          {"utc_offset_minutes", c.data.synthetic.utc_offset_minutes},
          {"start", format_iso8601(c.data.synthetic.start)}}},
        {"dataset",
         {{"loads_csv", c.data.dataset.loads_csv.string()},
          {"nwp_csv", c.data.dataset.nwp_csv.string()},
          {"meters", c.data.dataset.meters},
          {"min_span_days", c.data.dataset.cleaning.min_span_seconds / kSecondsPerDay},
          {"max_gap", c.data.dataset.cleaning.max_gap},
          {"utc_offset_minutes", c.data.dataset.cleaning.utc_offset_minutes},
          {"holidays", holidays},
          {"sign_corrections", corrections}}}}},
      {"hierarchy", {{"groups", c.hierarchy_groups}}},
      {"embedding",
       {{"horizon", c.embedding.horizon},
        {"embed", c.embedding.embed},
        {"lagged", c.embedding.lagged},
        {"calendar", name_list(c.embedding.calendar)},
        {"nwp", c.embedding.nwp}}},
      {"folds", {{"k", c.folds}}},
      {"forecasters",
       {{"methods", name_list(c.forecasters)},
        {"temperature", f.temperature},
        {"irradiance", f.irradiance},
        {"residual_stride", f.residual_stride},
        {"holt_winters",
         {{"samples", f.hw.samples},
          {"coarse_grid", f.hw.coarse_grid},
          {"refine_step", f.hw.refine_step},
          {"literal_s2_decay", f.hw_literal_s2_decay}}},
        {"armax",
         {{"ar", f.armax.ar},
          {"ma", f.armax.ma},
          {"long_ar", f.armax.long_ar},
          {"daily_harmonics", f.armax_daily_harmonics},
          {"weekly_harmonics", f.armax_weekly_harmonics}}},
        {"knn", {{"k", f.knn.k}}},
        {"boosted_trees",
         {{"trees", f.trees.trees},
          {"max_leaves", f.trees.max_leaves},
          {"learning_rate", f.trees.learning_rate},
          {"min_leaf", f.trees.min_leaf},
          {"lambda", f.trees.lambda},
          {"max_bins", f.trees.max_bins},
          {"row_stride", f.trees.row_stride},
          {"row_subsample", f.trees.row_subsample},
          {"col_subsample", f.trees.col_subsample},
          {"cross_fit_residuals", f.cross_fit_residuals}}}}},
      {"reconciliation",
       {{"forecaster", to_string(r.forecaster)},
        {"methods", name_list(r.methods)},
        {"covariance", name_list(r.covariance)},
        {"glasso_lambda", r.glasso.lambda},
        {"glasso_max_sweeps", r.glasso.max_sweeps},
        {"glasso_tolerance", r.glasso.tolerance},
        {"covariance_scope", to_string(r.scope)},
        {"covariance_horizon", to_string(r.horizon)},
        {"bayes_cross_covariance", r.bayes_cross_covariance}}},
      {"evaluation",
       {{"quantiles", f.grid.alphas()},
        {"mape_floor", c.evaluation.mape_floor},
        {"reduction_bin", c.evaluation.reduction_bin}}},
      {"seed", c.seed},
      {"output", c.output.string()},
      {"workers", c.workers},
      {"cache", c.cache}};
}

std::string config_hash(const BenchmarkConfig& config) {
  json j = to_json(config);
  j.erase("output");
  j.erase("workers");
  j.erase("cache");
  return sha256_hex(j.dump());
}

std::string forecast_stage_hash(const BenchmarkConfig& config, Method method) {
  const json full = to_json(config);
  json forecasters = full.at("forecasters");
  forecasters.erase("methods");
  const json key{{"method", to_string(method)},
                 {"data", full.at("data")},
                 {"hierarchy", full.at("hierarchy")},
                 {"embedding", full.at("embedding")},
                 {"folds", full.at("folds")},
                 {"forecasters", forecasters},
                 {"quantiles", full.at("evaluation").at("quantiles")},
                 {"seed", full.at("seed")}};
  return sha256_hex(key.dump());
}

}  // namespace gridbench
