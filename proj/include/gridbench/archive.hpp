#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridbench/cv.hpp"

namespace gridbench {

/// Binary cache of cross-validated forecasts: a magic tag, a JSON header
/// describing every block, then the raw doubles in header order. `key` is
/// stored in the header and checked on load.
void save_forecasts(const std::filesystem::path& path, const std::string& key,
                    const std::vector<ForecastResult>& results);

/// Returns nothing when the file is absent or was written under another key.
std::optional<std::vector<ForecastResult>> load_forecasts(const std::filesystem::path& path,
                                                          const std::string& key);

}  // namespace gridbench
