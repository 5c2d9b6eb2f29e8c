#include "gridbench/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

using nlohmann::json;

namespace {

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json score_pair(const ScorePair& p) { return {{"top", p.top}, {"bottom_average", p.bottom_average}}; }

/// Present cells as [d, h, value] with h counted from 1.
json sparse_map(const KpiMatrix& m) {
  json cells = json::array();
  for (Index d = 0; d < m.values.rows(); ++d)
    for (Index h = 0; h < m.values.cols(); ++h)
      if (m.present(d, h)) cells.push_back({d, h + 1, m.values(d, h)});
  return cells;
}

json series_block(const SeriesScores& s) {
  json j{{"rmse_mean", s.rmse.mean()},
         {"mape_mean", s.mape.mean()},
         {"qs", s.qs.score},
         {"mape_exclusions", s.mape_exclusions},
         {"rmse_profile", vec(horizon_profile(s.rmse))},
         {"mape_profile", vec(horizon_profile(s.mape))},
         {"qs_profile", vec(s.qs.score_by_step)},
         {"quantile_loss", vec(s.qs.mean_loss)}};
  if (s.nrmse) j["nrmse_profile"] = vec(horizon_profile(*s.nrmse));
  if (s.nmape) j["nmape_profile"] = vec(horizon_profile(*s.nmape));
  if (s.nqs_by_step) j["nqs_profile"] = vec(*s.nqs_by_step);
  return j;
}

double number(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : std::string("nan"); }

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) throw DataError(fmt::format("cannot write {}", path.string()));
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Mean of a per-series curve over the bottom series, skipping NaN.
std::vector<double> bottom_average(const json& series_blocks, const std::vector<std::string>& bottom,
                                   const char* key, std::size_t length) {
  std::vector<double> sum(length, 0.0);
  std::vector<int> n(length, 0);
  for (const auto& name : bottom) {
    const json& block = series_blocks.at(name);
    if (!block.contains(key)) continue;
    const json& curve = block.at(key);
    for (std::size_t i = 0; i < length && i < curve.size(); ++i) {
      const double v = number(curve[i]);
      if (std::isfinite(v)) {
        sum[i] += v;
        ++n[i];
      }
    }
  }
  for (std::size_t i = 0; i < length; ++i) sum[i] = n[i] ? sum[i] / n[i] : std::numeric_limits<double>::quiet_NaN();
  return sum;
}

}  // namespace

json build_summary(const SummaryInputs& in) {
  if (!in.hierarchy) throw ConfigError("summary needs the hierarchy");
  const Hierarchy& h = *in.hierarchy;
  json j;
  j["config_hash"] = in.config_hash;
  j["series"] = h.names;
  j["levels"] = h.level;
  j["n_bottom"] = h.n_bottom;
  j["steps_per_day"] = in.steps_per_day;
  j["horizon"] = in.horizon;
  j["quantiles"] = in.alphas;

  std::vector<SummaryRow> rows;
  json forecasters = json::object();
  for (const auto& eval : in.forecasters) {
    rows.push_back(summary_row(eval, h));
    json series = json::object();
    for (const auto& s : eval.series) series[s.series] = series_block(s);
    json block{{"series", series}};
    const SeriesScores& top = eval.series.front();
    if (top.nrmse) block["top_nrmse_map"] = sparse_map(*top.nrmse);
    if (top.nmape) block["top_nmape_map"] = sparse_map(*top.nmape);
    forecasters[eval.name] = std::move(block);
  }
  j["forecasters"] = forecasters;

  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"method", r.method},
                     {"mape", score_pair(r.mape)},
                     {"rmse", score_pair(r.rmse)},
                     {"qs", score_pair(r.qs)},
                     {"nmape", score_pair(r.nmape)},
                     {"nrmse", score_pair(r.nrmse)},
                     {"nqs", score_pair(r.nqs)}});
  }
  j["summary_table"] = table;

  // Persistence is the normalization reference, not a contender.
  std::vector<SummaryRow> contenders;
  for (const auto& r : rows)
    if (r.method != "persistence") contenders.push_back(r);
  if (contenders.size() >= 2) {
    const ForecasterComparison cmp = compare_forecasters(contenders);
    json rankings = json::array();
    for (const auto& c : cmp.rankings) rankings.push_back({{"cell", c.cell}, {"order", c.order}, {"tie", c.tie}});
    j["ranking"] = {{"cells", rankings}, {"winner", cmp.winner ? json(*cmp.winner) : json(nullptr)}};
  }

  if (!in.reconciled.empty()) {
    json variants = json::array();
    for (std::size_t v = 0; v < in.effects.size(); ++v) {
      const auto& e = in.effects[v];
      json binned = json::object();
      for (std::size_t s = 0; s < h.names.size(); ++s) binned[h.names[s]] = vec(e.binned.col(static_cast<Index>(s)));
      json series = json::object();
      for (const auto& s : in.reconciled[v].series) series[s.series] = series_block(s);
      variants.push_back({{"name", e.variant},
                          {"top_mean_reduction", e.top_mean},
                          {"bottom_mean_reduction", e.bottom_mean},
                          {"hierarchy_mean_reduction", e.hierarchy_mean},
                          {"top_curve", vec(e.top_curve)},
                          {"hierarchy_average_curve", vec(e.hierarchy_average_curve)},
                          {"binned", binned},
                          {"series", series},
                          {"diagnostics", in.reconciliation_diagnostics.value(e.variant, json::array())}});
    }
    j["reconciliation"] = {{"base", in.reconciliation_base}, {"variants", variants}};
  }
  return j;
}

std::string dump_summary(const json& summary) { return summary.dump(1) + "\n"; }

std::vector<std::filesystem::path> write_plot_data(const json& summary, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto names = summary.at("series").get<std::vector<std::string>>();
  const int n_bottom = summary.at("n_bottom").get<int>();
  const std::vector<std::string> bottom(names.end() - n_bottom, names.end());
  const std::string& top = names.front();
  const auto horizon = summary.at("horizon").get<std::size_t>();
  const auto alphas = summary.at("quantiles").get<std::vector<double>>();
  const json& forecasters = summary.at("forecasters");

  // Normalized maps of the top series with the no-improvement mask.
  for (const auto& [method, block] : forecasters.items()) {
    for (const char* metric : {"nrmse", "nmape"}) {
      const std::string key = fmt::format("top_{}_map", metric);
      if (!block.contains(key)) continue;
      CsvFile f(dir / fmt::format("{}_map_{}.csv", metric, method));
      f.row({"step_of_day", "step_ahead", "value", "no_improvement"});
      for (const auto& c : block.at(key)) {
        const double v = number(c[2]);
        f.row({std::to_string(c[0].get<int>()), std::to_string(c[1].get<int>()), cell(v), v >= 1.0 ? "1" : "0"});
      }
      written.push_back(f.path());
    }
  }

  // Normalized profiles, top series and bottom average.
  {
    CsvFile f(dir / "horizon_profiles.csv");
    std::vector<std::string> header{"step_ahead"};
    std::vector<std::vector<double>> columns;
    for (const auto& [method, block] : forecasters.items()) {
      const json& series = block.at("series");
      for (const char* key : {"nrmse_profile", "nmape_profile"}) {
        if (!series.at(top).contains(key)) continue;
        const std::string metric = std::string(key).substr(0, 5);
        header.push_back(fmt::format("{}_{}_top", method, metric));
        std::vector<double> t;
        for (const auto& v : series.at(top).at(key)) t.push_back(number(v));
        columns.push_back(t);
        header.push_back(fmt::format("{}_{}_bottom_average", method, metric));
        columns.push_back(bottom_average(series, bottom, key, horizon));
      }
    }
    f.row(header);
    for (std::size_t i = 0; i < horizon; ++i) {
      std::vector<std::string> r{std::to_string(i + 1)};
      for (const auto& c : columns) r.push_back(cell(i < c.size() ? c[i] : std::numeric_limits<double>::quiet_NaN()));
      f.row(r);
    }
    written.push_back(f.path());
  }

  // Normalized QS by step ahead and mean quantile loss by level, top series.
  {
    CsvFile by_step(dir / "nqs_by_step.csv");
    CsvFile by_alpha(dir / "quantile_loss.csv");
    std::vector<std::string> h1{"step_ahead"}, h2{"alpha"};
    std::vector<std::vector<double>> c1, c2;
    for (const auto& [method, block] : forecasters.items()) {
      const json& s = block.at("series").at(top);
      if (s.contains("nqs_profile")) {
        h1.push_back(method + "_nqs_top");
        std::vector<double> v;
        for (const auto& x : s.at("nqs_profile")) v.push_back(number(x));
        c1.push_back(v);
      }
      h2.push_back(method + "_loss_top");
      std::vector<double> v;
      for (const auto& x : s.at("quantile_loss")) v.push_back(number(x));
      c2.push_back(v);
    }
    by_step.row(h1);
    for (std::size_t i = 0; i < horizon; ++i) {
      std::vector<std::string> r{std::to_string(i + 1)};
      for (const auto& c : c1) r.push_back(cell(c.at(i)));
      by_step.row(r);
    }
    by_alpha.row(h2);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::vector<std::string> r{cell(alphas[a])};
      for (const auto& c : c2) r.push_back(cell(c.at(a)));
      by_alpha.row(r);
    }
    written.push_back(by_step.path());
    written.push_back(by_alpha.path());
  }

  if (summary.contains("reconciliation")) {
    const json& variants = summary.at("reconciliation").at("variants");
    // Per-bin reductions of every bottom series (box-plot input).
    {
      CsvFile f(dir / "bottom_reduction_bins.csv");
      f.row({"variant", "bin", "series", "reduction"});
      for (const auto& v : variants) {
        for (const auto& name : bottom) {
          const json& bins = v.at("binned").at(name);
          for (std::size_t b = 0; b < bins.size(); ++b) {
            f.row({v.at("name").get<std::string>(), std::to_string(b + 1), name, cell(number(bins[b]))});
          }
        }
      }
      written.push_back(f.path());
    }
    // Per-bin reduction of the top series.
    {
      CsvFile f(dir / "top_reduction_bins.csv");
      std::vector<std::string> header{"bin"};
      for (const auto& v : variants) header.push_back(v.at("name").get<std::string>());
      f.row(header);
      const std::size_t bins = variants.empty() ? 0 : variants.front().at("binned").at(top).size();
      for (std::size_t b = 0; b < bins; ++b) {
        std::vector<std::string> r{std::to_string(b + 1)};
        for (const auto& v : variants) r.push_back(cell(number(v.at("binned").at(top)[b])));
        f.row(r);
      }
      written.push_back(f.path());
    }
    // Reduction by step ahead, hierarchy average and top series.
    {
      CsvFile f(dir / "reduction_by_step.csv");
      std::vector<std::string> header{"step_ahead"};
      for (const auto& v : variants) {
        header.push_back(v.at("name").get<std::string>() + "_hierarchy_average");
        header.push_back(v.at("name").get<std::string>() + "_top");
      }
      f.row(header);
      for (std::size_t i = 0; i < horizon; ++i) {
        std::vector<std::string> r{std::to_string(i + 1)};
        for (const auto& v : variants) {
          r.push_back(cell(number(v.at("hierarchy_average_curve").at(i))));
          r.push_back(cell(number(v.at("top_curve").at(i))));
        }
        f.row(r);
      }
      written.push_back(f.path());
    }
  }

  // Forecaster summary, top series and bottom average.
  {
    CsvFile f(dir / "summary_table.csv");
    f.row({"method", "mape_top", "mape_bottom_average", "rmse_top", "rmse_bottom_average", "qs_top",
           "qs_bottom_average"});
    for (const auto& r : summary.at("summary_table")) {
      f.row({r.at("method").get<std::string>(), cell(number(r.at("mape").at("top"))),
             cell(number(r.at("mape").at("bottom_average"))), cell(number(r.at("rmse").at("top"))),
             cell(number(r.at("rmse").at("bottom_average"))), cell(number(r.at("qs").at("top"))),
             cell(number(r.at("qs").at("bottom_average")))});
    }
    written.push_back(f.path());
  }
  return written;
}

void write_kpi_csv(const KpiMatrix& map, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  CsvFile f(path);
  std::vector<std::string> header{"step_of_day"};
  for (Index h = 0; h < map.values.cols(); ++h) header.push_back(fmt::format("h{}", h + 1));
  f.row(header);
  for (Index d = 0; d < map.values.rows(); ++d) {
    std::vector<std::string> r{std::to_string(d)};
    for (Index h = 0; h < map.values.cols(); ++h) r.push_back(map.present(d, h) ? cell(map.values(d, h)) : "");
    f.row(r);
  }
}

}  // namespace gridbench
