#include "gridbench/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "gridbench/frame.hpp"

namespace gridbench {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  std::string_view text = cell;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty() || text == "NaN" || text == "nan" || text == "NA") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("line {}: cannot parse '{}' as a number", line_no, cell));
  }
  return value;
}

}  // namespace

WideTable read_wide_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& time_column_names) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("'{}' is empty", path.string()));
  const auto head = split_line(line);
  if (head.size() < 2) throw DataError(fmt::format("'{}' has no data columns", path.string()));

  std::vector<int> time_slot(head.size(), -1);
  WideTable table;
  table.time_columns.resize(time_column_names.size());
  for (std::size_t c = 1; c < head.size(); ++c) {
    auto it = std::find(time_column_names.begin(), time_column_names.end(), head[c]);
    if (it != time_column_names.end()) {
      time_slot[c] = static_cast<int>(it - time_column_names.begin());
    } else {
      table.header.push_back(head[c]);
    }
  }
  for (const auto& name : time_column_names) {
    if (std::find(head.begin(), head.end(), name) == head.end()) {
      throw DataError(fmt::format("'{}' lacks column '{}'", path.string(), name));
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != head.size()) {
      throw DataError(fmt::format("{}:{}: expected {} cells, found {}", path.string(), line_no,
                                  head.size(), cells.size()));
    }
    table.timestamps.push_back(parse_iso8601(cells[0]));
    std::vector<double> row;
    row.reserve(table.header.size());
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (time_slot[c] >= 0) {
        table.time_columns[static_cast<std::size_t>(time_slot[c])].push_back(parse_iso8601(cells[c]));
      } else {
        row.push_back(parse_cell(cells[c], line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return table;
}

void write_wide_csv(const std::filesystem::path& path, const std::string& time_header,
                    const std::vector<std::string>& header, const std::vector<Timestamp>& timestamps,
                    const Matrix& values) {
  if (static_cast<Index>(timestamps.size()) != values.rows() ||
      static_cast<Index>(header.size()) != values.cols()) {
    throw DataError("write_wide_csv: shape mismatch");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << time_header;
  for (const auto& h : header) out << ',' << h;
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    out << format_iso8601(timestamps[static_cast<std::size_t>(r)]);
    for (Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      out << ',';
      if (std::isfinite(v)) out << fmt::format("{:.10g}", v);
    }
    out << '\n';
  }
}

}  // namespace gridbench
