#include "gridbench/persistence.hpp"

#include <spdlog/fmt/fmt.h>

namespace gridbench {

Vector persistence_forecast(std::span<const double> series, Index t, int horizon, int period) {
  if (horizon > period) throw ConfigError("persistence horizon longer than its period");
  if (t + 1 - period < 0 || t >= static_cast<Index>(series.size())) {
    throw DataError(fmt::format("persistence at issue index {} lacks {} steps of history", t, period));
  }
  Vector out(horizon);
  for (int j = 1; j <= horizon; ++j) out(j - 1) = series[static_cast<std::size_t>(t + j - period)];
  return out;
}

}  // namespace gridbench
