#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridbench/frame.hpp"

namespace gridbench {

enum class CalendarFeature { step_of_day, day_of_week, holiday };

std::string_view to_string(CalendarFeature feature);
CalendarFeature calendar_feature_from_string(std::string_view name);

/// Source of exogenous forecasts (NWP) as seen from a given issue time.
class ExogenousSource {
 public:
  virtual ~ExogenousSource() = default;
  /// Writes the values of `variable` valid at first_valid + i * step,
  /// i = 0..out.size()-1, using only information issued at or before `issue`.
  virtual void fill(std::string_view variable, Timestamp issue, Timestamp first_valid,
                    std::int64_t step_seconds, std::span<double> out) const = 0;
};

struct EmbeddingSpec {
  int horizon = 144;
  int embed = 144;
  /// Columns embedded with `embed` lags. Empty means "the target only".
  std::vector<std::string> lagged;
  std::vector<CalendarFeature> calendar{CalendarFeature::step_of_day,
                                        CalendarFeature::day_of_week, CalendarFeature::holiday};
  /// Exogenous forecast variables appended for the `horizon` target instants.
  std::vector<std::string> nwp;

  void validate() const;
};

/// Column layout of a regressor matrix.
struct FeatureLayout {
  struct Block {
    std::string name;
    Index offset = 0;
    Index width = 0;
  };
  std::vector<Block> lags;
  Index calendar_offset = 0;
  std::vector<CalendarFeature> calendar;
  std::vector<Block> nwp;
  Index width = 0;

  const Block* find_lag(std::string_view name) const;
  const Block* find_nwp(std::string_view name) const;
};

/// Aligned regressors X and Hankel targets Y for one series.
///
/// Row r corresponds to issue index t = embed + r of the source frame: X holds
/// the `embed` instants t-embed+1..t of each lagged column (oldest first), the
/// calendar codes at t and the exogenous forecasts for t+1..t+horizon; Y holds
/// the target at t+1..t+horizon.
struct SamplePair {
  Matrix X;
  Matrix Y;
  std::vector<Timestamp> issue_times;
  std::vector<Index> issue_index;
  std::vector<int> issue_step_of_day;
  FeatureLayout layout;
  int horizon = 0;
  int embed = 0;

  Index rows() const { return X.rows(); }
  /// SamplePair row of a frame issue index (throws when out of range).
  Index row_of_issue(Index t) const;
};

/// When `exogenous` is null, NWP features are read from frame columns of the
/// same name (treated as known ahead).
SamplePair hankel_embed(const TimeSeriesFrame& frame, std::string_view target,
                        const EmbeddingSpec& spec, const ExogenousSource* exogenous = nullptr);

}  // namespace gridbench
