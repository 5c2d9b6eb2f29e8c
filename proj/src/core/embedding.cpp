#include "gridbench/embedding.hpp"

#include <spdlog/fmt/fmt.h>

namespace gridbench {

std::string_view to_string(CalendarFeature feature) {
  switch (feature) {
    case CalendarFeature::step_of_day: return "step_of_day";
    case CalendarFeature::day_of_week: return "day_of_week";
    case CalendarFeature::holiday: return "holiday";
  }
  return "unknown";
}

CalendarFeature calendar_feature_from_string(std::string_view name) {
  if (name == "step_of_day") return CalendarFeature::step_of_day;
  if (name == "day_of_week") return CalendarFeature::day_of_week;
  if (name == "holiday") return CalendarFeature::holiday;
  throw ConfigError(fmt::format("unknown calendar feature '{}'", name));
}

void EmbeddingSpec::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (embed < 1) throw ConfigError("embedding length must be >= 1");
}

const FeatureLayout::Block* FeatureLayout::find_lag(std::string_view name) const {
  for (const auto& b : lags)
    if (b.name == name) return &b;
  return nullptr;
}

const FeatureLayout::Block* FeatureLayout::find_nwp(std::string_view name) const {
  for (const auto& b : nwp)
    if (b.name == name) return &b;
  return nullptr;
}

Index SamplePair::row_of_issue(Index t) const {
  const Index r = t - embed;
  if (r < 0 || r >= rows()) throw DataError(fmt::format("issue index {} has no sample row", t));
  return r;
}

SamplePair hankel_embed(const TimeSeriesFrame& frame, std::string_view target,
                        const EmbeddingSpec& spec, const ExogenousSource* exogenous) {
  spec.validate();
  const Index T = frame.size();
  const int e = spec.embed;
  const int h = spec.horizon;
  if (T <= static_cast<Index>(h) + e) {
    throw DataError(fmt::format("frame of {} instants too short for embed {} + horizon {}", T, e, h));
  }
  const Index target_col = frame.column_index(target);

  std::vector<std::string> lagged = spec.lagged;
  if (lagged.empty()) lagged.emplace_back(target);

  SamplePair out;
  out.horizon = h;
  out.embed = e;
  FeatureLayout& layout = out.layout;
  std::vector<Index> lag_cols;
  Index offset = 0;
  for (const auto& name : lagged) {
    const std::string& resolved = (name == "target") ? std::string(target) : name;
    lag_cols.push_back(frame.column_index(resolved));
    layout.lags.push_back({resolved, offset, e});
    offset += e;
  }
  layout.calendar_offset = offset;
  layout.calendar = spec.calendar;
  offset += static_cast<Index>(spec.calendar.size());
  std::vector<Index> nwp_cols;
  for (const auto& name : spec.nwp) {
    if (exogenous == nullptr) nwp_cols.push_back(frame.column_index(name));
    layout.nwp.push_back({name, offset, h});
    offset += h;
  }
  layout.width = offset;

  const Index rows = T - h - e;
  out.X.resize(rows, layout.width);
  out.Y.resize(rows, h);
  out.issue_times.resize(static_cast<std::size_t>(rows));
  out.issue_index.resize(static_cast<std::size_t>(rows));
  out.issue_step_of_day.resize(static_cast<std::size_t>(rows));

  const Matrix& values = frame.values();
  std::vector<double> buffer(static_cast<std::size_t>(h));
  for (Index r = 0; r < rows; ++r) {
    const Index t = e + r;
    const auto ur = static_cast<std::size_t>(r);
    out.issue_times[ur] = frame.timestamp(t);
    out.issue_index[ur] = t;
    out.issue_step_of_day[ur] = frame.step_of_day(t);
    for (std::size_t k = 0; k < lag_cols.size(); ++k) {
      out.X.block(r, layout.lags[k].offset, 1, e) =
          values.col(lag_cols[k]).segment(t - e + 1, e).transpose();
    }
    for (std::size_t c = 0; c < spec.calendar.size(); ++c) {
      double code = 0.0;
      switch (spec.calendar[c]) {
        case CalendarFeature::step_of_day: code = frame.step_of_day(t); break;
        case CalendarFeature::day_of_week: code = frame.day_of_week(t); break;
        case CalendarFeature::holiday: code = frame.is_holiday(t) ? 1.0 : 0.0; break;
      }
      out.X(r, layout.calendar_offset + static_cast<Index>(c)) = code;
    }
    for (std::size_t k = 0; k < layout.nwp.size(); ++k) {
      if (exogenous == nullptr) {
        out.X.block(r, layout.nwp[k].offset, 1, h) =
            values.col(nwp_cols[k]).segment(t + 1, h).transpose();
      } else {
        exogenous->fill(layout.nwp[k].name, frame.timestamp(t), frame.timestamp(t + 1),
                        frame.step_seconds(), buffer);
        for (int j = 0; j < h; ++j) out.X(r, layout.nwp[k].offset + j) = buffer[static_cast<std::size_t>(j)];
      }
    }
    out.Y.row(r) = values.col(target_col).segment(t + 1, h).transpose();
  }
  return out;
}

}  // namespace gridbench
