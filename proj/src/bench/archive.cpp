#include "gridbench/archive.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'G', 'B', 'F', 'C', 'A', 'S', 'T', '1'};

void put(std::vector<double>& blob, const Matrix& m) { blob.insert(blob.end(), m.data(), m.data() + m.size()); }

Matrix take(const std::vector<double>& blob, std::size_t& pos, Index rows, Index cols) {
  const auto n = static_cast<std::size_t>(rows * cols);
  if (pos + n > blob.size()) throw DataError("forecast archive is truncated");
  Matrix m(rows, cols);
  std::memcpy(m.data(), blob.data() + pos, n * sizeof(double));
  pos += n;
  return m;
}

}  // namespace

void save_forecasts(const std::filesystem::path& path, const std::string& key,
                    const std::vector<ForecastResult>& results) {
  json header{{"key", key}, {"results", json::array()}};
  std::vector<double> blob;
  for (const auto& r : results) {
    json jr{{"series", r.series},
            {"method", to_string(r.method)},
            {"horizon", r.horizon},
            {"grid", r.grid.alphas()},
            {"folds", json::array()}};
    for (const auto& f : r.folds) {
      jr["folds"].push_back({{"fold", f.fold},
                             {"test_rows", f.test_rows},
                             {"issue_index", f.issue_index},
                             {"issue_step_of_day", f.issue_step_of_day},
                             {"residual_rows", f.residual_rows},
                             {"residual_step_of_day", f.residual_step_of_day},
                             {"quantile_cols", f.quantiles.empty() ? 0 : f.quantiles.front().cols()}});
      put(blob, f.point);
      put(blob, f.actual);
      for (const auto& q : f.quantiles) put(blob, q);
      put(blob, f.residuals);
    }
    header["results"].push_back(std::move(jr));
  }

  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write {}", tmp));
    const std::string text = header.dump();
    const std::uint64_t length = text.size();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (!out) throw DataError(fmt::format("failed writing {}", tmp));
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::vector<ForecastResult>> load_forecasts(const std::filesystem::path& path,
                                                          const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kMagic];
  std::uint64_t length = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    spdlog::warn("ignoring malformed forecast cache {}", path.string());
    return std::nullopt;
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const json header = json::parse(text, nullptr, false);
  if (!in || header.is_discarded()) {
    spdlog::warn("ignoring malformed forecast cache {}", path.string());
    return std::nullopt;
  }
  if (header.value("key", std::string{}) != key) return std::nullopt;

  std::vector<double> blob;
  {
    const auto begin = in.tellg();
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg() - begin);
    in.seekg(begin);
    blob.resize(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
  }

  std::vector<ForecastResult> results;
  std::size_t pos = 0;
  for (const auto& jr : header.at("results")) {
    ForecastResult r;
    r.series = jr.at("series").get<std::string>();
    r.method = method_from_string(jr.at("method").get<std::string>());
    r.horizon = jr.at("horizon").get<int>();
    r.grid = QuantileGrid(jr.at("grid").get<std::vector<double>>());
    for (const auto& jf : jr.at("folds")) {
      FoldForecast f;
      f.fold = jf.at("fold").get<int>();
      f.test_rows = jf.at("test_rows").get<std::vector<Index>>();
      f.issue_index = jf.at("issue_index").get<std::vector<Index>>();
      f.issue_step_of_day = jf.at("issue_step_of_day").get<std::vector<int>>();
      f.residual_rows = jf.at("residual_rows").get<std::vector<Index>>();
      f.residual_step_of_day = jf.at("residual_step_of_day").get<std::vector<int>>();
      const auto rows = static_cast<Index>(f.test_rows.size());
      const Index qcols = jf.at("quantile_cols").get<Index>();
      f.point = take(blob, pos, rows, r.horizon);
      f.actual = take(blob, pos, rows, r.horizon);
      for (Index i = 0; i < rows; ++i) f.quantiles.push_back(take(blob, pos, r.horizon, qcols));
      f.residuals = take(blob, pos, static_cast<Index>(f.residual_rows.size()), r.horizon);
      r.folds.push_back(std::move(f));
    }
    results.push_back(std::move(r));
  }
  if (pos != blob.size()) throw DataError(fmt::format("forecast archive {} has trailing data", path.string()));
  return results;
}

}  // namespace gridbench
