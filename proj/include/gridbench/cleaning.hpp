#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridbench/csv.hpp"
#include "gridbench/frame.hpp"

namespace gridbench {

/// Per-meter P_mean readings on a regular grid; NaN marks a missing sample.
struct RawMeterTable {
  Timestamp start = 0;
  std::int64_t step_seconds = kDefaultStepSeconds;
  std::vector<std::string> ids;
  Matrix values;

  Index size() const { return values.rows(); }
  Index meter_index(std::string_view id) const;

  /// Places sorted, duplicate-free samples onto the regular grid. Rows missing
  /// from the input become NaN rows.
  static RawMeterTable from_wide(const WideTable& table, std::int64_t step_seconds);
};

struct MeterCleaning {
  std::string id;
  bool retained = false;
  std::string reason;
  int gap_count = 0;
  int max_gap = 0;
  int interpolated = 0;
  int sign_corrections = 0;
  Timestamp first_valid = 0;
  Timestamp last_valid = 0;
};

struct CleaningReport {
  std::vector<MeterCleaning> meters;

  MeterCleaning& entry(std::string_view id);
  const MeterCleaning& entry(std::string_view id) const;
  nlohmann::json to_json() const;
};

/// Keeps meters with at least `min_span_seconds` between first and last valid
/// sample and no run of more than `max_gap` consecutive missing samples.
std::pair<RawMeterTable, CleaningReport> select_meters(const RawMeterTable& raw,
                                                       std::int64_t min_span_seconds,
                                                       int max_gap);

struct FilledSeries {
  std::vector<double> values;  // trimmed to [first, last]
  Index first = 0;
  Index last = -1;
  int interpolated = 0;
};

/// Fills interior NaN runs with monotone piecewise-cubic Hermite interpolation
/// over all valid samples. Leading and trailing NaN runs are trimmed.
FilledSeries fill_gaps_pchip(std::span<const double> series);

struct SignCorrection {
  std::string meter;
  Timestamp instant = 0;
  /// true: negate from `instant` onward; false: negate strictly before it.
  bool onward = true;
};

/// Negates the configured segments. Applying the same correction twice is the
/// identity.
RawMeterTable apply_sign_corrections(const RawMeterTable& raw,
                                     const std::vector<SignCorrection>& corrections,
                                     CleaningReport* report = nullptr);
void apply_sign_correction(std::span<double> series, Index instant, bool onward);

struct SignFlipCandidate {
  std::string meter;
  Timestamp instant = 0;
  double mean_before = 0.0;
  double mean_after = 0.0;
};

/// Flags day boundaries where the weekly mean changes sign while keeping a
/// similar magnitude. Candidates are reported, never applied.
std::vector<SignFlipCandidate> detect_sign_flips(const RawMeterTable& raw, int steps_per_day,
                                                 double magnitude_tolerance = 0.3);

struct CleaningOptions {
  std::int64_t min_span_seconds = 365LL * kSecondsPerDay;
  int max_gap = 6;
  std::vector<SignCorrection> corrections;
  int utc_offset_minutes = 0;
  std::set<LocalDay> holidays;
};

/// Full cleaning pipeline: selection, sign corrections, PCHIP gap filling and
/// trimming to the common span of whole local days.
std::pair<TimeSeriesFrame, CleaningReport> clean_meters(const RawMeterTable& raw,
                                                        const CleaningOptions& options);

}  // namespace gridbench
