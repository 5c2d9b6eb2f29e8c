#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

inline constexpr std::int64_t kDefaultStepSeconds = 600;
inline constexpr int kSecondsPerDay = 86400;

/// Days since 1970-01-01 in local civil time (fixed UTC offset).
using LocalDay = std::int64_t;

/// Uniformly sampled multivariate series sharing one time axis.
///
/// Timestamps are implicit (start + i * step), which makes the constant-step
/// invariant hold by construction. Calendar quantities are evaluated in local
/// civil time using a fixed UTC offset; daylight saving is not modelled.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame() = default;
  TimeSeriesFrame(Timestamp start, std::int64_t step_seconds, std::vector<std::string> names,
                  Matrix values, int utc_offset_minutes = 0);

  Index size() const { return values_.rows(); }
  Index column_count() const { return values_.cols(); }
  Timestamp start() const { return start_; }
  std::int64_t step_seconds() const { return step_; }
  int steps_per_day() const { return static_cast<int>(kSecondsPerDay / step_); }
  int utc_offset_minutes() const { return utc_offset_minutes_; }

  Timestamp timestamp(Index i) const { return start_ + i * step_; }
  /// Frame index of a timestamp; throws DataError when off-grid or out of range.
  Index index_of(Timestamp ts) const;

  const std::vector<std::string>& names() const { return names_; }
  bool has_column(std::string_view name) const;
  Index column_index(std::string_view name) const;
  Eigen::Ref<const Vector> column(std::string_view name) const;
  Eigen::Ref<const Vector> column(Index c) const { return values_.col(c); }
  const Matrix& values() const { return values_; }

  int step_of_day(Index i) const;
  /// Monday = 0 ... Sunday = 6.
  int day_of_week(Index i) const;
  LocalDay local_day(Index i) const;
  bool is_holiday(Index i) const { return holidays_.count(local_day(i)) > 0; }

  void set_holidays(std::set<LocalDay> days) { holidays_ = std::move(days); }
  const std::set<LocalDay>& holidays() const { return holidays_; }

  /// Returns a copy with `name` added (or replaced).
  TimeSeriesFrame with_column(const std::string& name, const Vector& values) const;
  TimeSeriesFrame select(const std::vector<std::string>& names) const;
  TimeSeriesFrame slice(Index begin, Index count) const;

  /// True when index 0 falls on local midnight.
  bool starts_at_midnight() const { return step_of_day(0) == 0; }
  /// Number of whole local days covered when the frame starts at midnight.
  int whole_days() const { return static_cast<int>(size() / steps_per_day()); }

 private:
  Timestamp start_ = 0;
  std::int64_t step_ = kDefaultStepSeconds;
  int utc_offset_minutes_ = 0;
  std::vector<std::string> names_;
  Matrix values_;
  std::set<LocalDay> holidays_;
};

/// Local civil day number of a timestamp.
LocalDay local_day_of(Timestamp ts, int utc_offset_minutes);

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (UTC) or "YYYY-MM-DD" (midnight UTC).
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp ts);
/// Parses "YYYY-MM-DD" into a day number since the epoch.
LocalDay parse_date(std::string_view text);

}  // namespace gridbench
