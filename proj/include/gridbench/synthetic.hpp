#pragma once

#include <cstdint>

#include "gridbench/frame.hpp"
#include "gridbench/nwp.hpp"

namespace gridbench {

struct SyntheticSpec {
  int n_bottom = 24;
  int days = 90;
  std::uint64_t seed = 1;
  /// Scales every stochastic component; 0 gives exactly weekly-periodic loads.
  double noise = 1.0;
  Timestamp start = 1516060800;  // 2018-01-16T00:00:00Z, a Tuesday
  int utc_offset_minutes = 0;
  double mean_kw = 81.0;
};

struct SyntheticData {
  TimeSeriesFrame loads;  // columns node_01..node_NN, kW
  NwpTable nwp;           // T, GHI, GNI, RH, p, W_s, W_dir; 12-hourly issuances, hourly values
  TimeSeriesFrame weather;  // true T and GHI on the load grid
};

/// Desk-scale stand-in for the metered dataset: daily and weekly load shapes,
/// a heating term driven by temperature, a PV term driven by irradiance on
/// some nodes, AR(1) noise, and NWP issuances whose error grows with lead time.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace gridbench
