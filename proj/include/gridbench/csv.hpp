#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

/// Wide table: ISO-8601 UTC timestamps in column 1, one numeric column per
/// header id. Empty cells and "NaN"/"NA" read as quiet NaN.
struct WideTable {
  std::vector<std::string> header;  // excludes the timestamp column
  std::vector<Timestamp> timestamps;
  Matrix values;
  /// Extra timestamp-valued columns requested by name (e.g. "issue_time").
  std::vector<std::vector<Timestamp>> time_columns;
};

WideTable read_wide_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& time_column_names = {});

void write_wide_csv(const std::filesystem::path& path, const std::string& time_header,
                    const std::vector<std::string>& header, const std::vector<Timestamp>& timestamps,
                    const Matrix& values);

}  // namespace gridbench
