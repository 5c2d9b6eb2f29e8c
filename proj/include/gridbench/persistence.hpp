#pragma once

#include <span>

#include "gridbench/types.hpp"

namespace gridbench {

/// Seasonal-daily persistence: forecast for t+j repeats y at t+j-period.
/// Requires t + 1 - period >= 0.
Vector persistence_forecast(std::span<const double> series, Index t, int horizon, int period);

}  // namespace gridbench
