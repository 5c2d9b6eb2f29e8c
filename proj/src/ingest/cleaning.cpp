#include "gridbench/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

// The Boost 1.74 pchip header calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GapStats {
  Index first = -1;
  Index last = -1;
  int gap_count = 0;
  int max_gap = 0;
};

GapStats gap_stats(const Eigen::Ref<const Vector>& col) {
  GapStats s;
  for (Index i = 0; i < col.size(); ++i) {
    if (std::isfinite(col(i))) {
      if (s.first < 0) s.first = i;
      s.last = i;
    }
  }
  if (s.first < 0) return s;
  int run = 0;
  for (Index i = s.first; i <= s.last; ++i) {
    if (std::isfinite(col(i))) {
      if (run > 0) {
        ++s.gap_count;
        s.max_gap = std::max(s.max_gap, run);
      }
      run = 0;
    } else {
      ++run;
    }
  }
  return s;
}

}  // namespace

Index RawMeterTable::meter_index(std::string_view id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw DataError(fmt::format("unknown meter '{}'", id));
  return static_cast<Index>(it - ids.begin());
}

RawMeterTable RawMeterTable::from_wide(const WideTable& table, std::int64_t step_seconds) {
  if (table.timestamps.empty()) throw DataError("meter table has no rows");
  for (std::size_t i = 1; i < table.timestamps.size(); ++i) {
    if (table.timestamps[i] == table.timestamps[i - 1]) {
      throw DataError(fmt::format("duplicate timestamp {}", format_iso8601(table.timestamps[i])));
    }
    if (table.timestamps[i] < table.timestamps[i - 1]) {
      throw DataError(fmt::format("timestamps not sorted at {}", format_iso8601(table.timestamps[i])));
    }
  }
  RawMeterTable raw;
  raw.start = table.timestamps.front();
  raw.step_seconds = step_seconds;
  raw.ids = table.header;
  const Index rows = (table.timestamps.back() - raw.start) / step_seconds + 1;
  raw.values = Matrix::Constant(rows, static_cast<Index>(raw.ids.size()), kNaN);
  for (std::size_t i = 0; i < table.timestamps.size(); ++i) {
    const std::int64_t offset = table.timestamps[i] - raw.start;
    if (offset % step_seconds != 0) {
      throw DataError(fmt::format("timestamp {} is off the {} s grid",
                                  format_iso8601(table.timestamps[i]), step_seconds));
    }
    raw.values.row(offset / step_seconds) = table.values.row(static_cast<Index>(i));
  }
  return raw;
}

MeterCleaning& CleaningReport::entry(std::string_view id) {
  for (auto& m : meters)
    if (m.id == id) return m;
  throw DataError(fmt::format("meter '{}' missing from cleaning report", id));
}

const MeterCleaning& CleaningReport::entry(std::string_view id) const {
  return const_cast<CleaningReport*>(this)->entry(id);
}

nlohmann::json CleaningReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : meters) {
    out.push_back({{"id", m.id},
                   {"retained", m.retained},
                   {"reason", m.reason},
                   {"gap_count", m.gap_count},
                   {"max_gap", m.max_gap},
                   {"interpolated", m.interpolated},
                   {"sign_corrections", m.sign_corrections},
                   {"first_valid", format_iso8601(m.first_valid)},
                   {"last_valid", format_iso8601(m.last_valid)}});
  }
  return nlohmann::json{{"meters", out}};
}

std::pair<RawMeterTable, CleaningReport> select_meters(const RawMeterTable& raw,
                                                       std::int64_t min_span_seconds,
                                                       int max_gap) {
  CleaningReport report;
  std::vector<Index> keep;
  for (Index c = 0; c < raw.values.cols(); ++c) {
    MeterCleaning m;
    m.id = raw.ids[static_cast<std::size_t>(c)];
    const GapStats s = gap_stats(raw.values.col(c));
    if (s.first < 0) {
      m.reason = "no valid samples";
    } else {
      m.first_valid = raw.start + s.first * raw.step_seconds;
      m.last_valid = raw.start + s.last * raw.step_seconds;
      m.gap_count = s.gap_count;
      m.max_gap = s.max_gap;
      const std::int64_t span = m.last_valid - m.first_valid + raw.step_seconds;
      if (span < min_span_seconds) {
        m.reason = fmt::format("span {} s below minimum {} s", span, min_span_seconds);
      } else if (s.max_gap > max_gap) {
        m.reason = fmt::format("gap of {} consecutive missing samples exceeds {}", s.max_gap, max_gap);
      } else {
        m.retained = true;
        m.reason = "retained";
        keep.push_back(c);
      }
    }
    report.meters.push_back(std::move(m));
  }
  if (keep.empty()) throw DataError("no meter satisfies the selection rules");

  RawMeterTable out;
  out.start = raw.start;
  out.step_seconds = raw.step_seconds;
  out.values.resize(raw.values.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.ids.push_back(raw.ids[static_cast<std::size_t>(keep[k])]);
    out.values.col(static_cast<Index>(k)) = raw.values.col(keep[k]);
  }
  return {std::move(out), std::move(report)};
}

FilledSeries fill_gaps_pchip(std::span<const double> series) {
  FilledSeries out;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (std::isfinite(series[i])) {
      x.push_back(static_cast<double>(i));
      y.push_back(series[i]);
    }
  }
  if (x.empty()) throw DataError("series has no valid samples");
  out.first = static_cast<Index>(x.front());
  out.last = static_cast<Index>(x.back());
  out.values.assign(series.begin() + out.first, series.begin() + out.last + 1);
  const bool has_gaps = static_cast<Index>(x.size()) != out.last - out.first + 1;
  if (!has_gaps) return out;

  if (x.size() < 4) {
    // Too few knots for the cubic scheme; linear is the monotone interpolant.
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      if (std::isfinite(out.values[i])) continue;
      const double xi = static_cast<double>(out.first) + static_cast<double>(i);
      const auto hi = std::upper_bound(x.begin(), x.end(), xi) - x.begin();
      const auto lo = hi - 1;
      const double w = (xi - x[static_cast<std::size_t>(lo)]) /
                       (x[static_cast<std::size_t>(hi)] - x[static_cast<std::size_t>(lo)]);
      out.values[i] = (1 - w) * y[static_cast<std::size_t>(lo)] + w * y[static_cast<std::size_t>(hi)];
      ++out.interpolated;
    }
    return out;
  }

  const boost::math::interpolators::pchip<std::vector<double>> spline(std::move(x), std::move(y));
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (std::isfinite(out.values[i])) continue;
    out.values[i] = spline(static_cast<double>(out.first) + static_cast<double>(i));
    ++out.interpolated;
  }
  return out;
}

void apply_sign_correction(std::span<double> series, Index instant, bool onward) {
  const auto n = static_cast<Index>(series.size());
  if (instant < 0 || instant > n) throw DataError("sign correction instant out of range");
  const Index begin = onward ? instant : 0;
  const Index end = onward ? n : instant;
  for (Index i = begin; i < end; ++i) series[static_cast<std::size_t>(i)] = -series[static_cast<std::size_t>(i)];
}

RawMeterTable apply_sign_corrections(const RawMeterTable& raw,
                                     const std::vector<SignCorrection>& corrections,
                                     CleaningReport* report) {
  RawMeterTable out = raw;
  for (const auto& corr : corrections) {
    const Index c = out.meter_index(corr.meter);
    const std::int64_t offset = corr.instant - out.start;
    if (offset % out.step_seconds != 0) throw DataError("sign correction instant off the grid");
    const Index instant = std::clamp<Index>(offset / out.step_seconds, 0, out.size());
    std::span<double> col(out.values.col(c).data(), static_cast<std::size_t>(out.size()));
    apply_sign_correction(col, instant, corr.onward);
    if (report != nullptr) ++report->entry(corr.meter).sign_corrections;
  }
  return out;
}

std::vector<SignFlipCandidate> detect_sign_flips(const RawMeterTable& raw, int steps_per_day,
                                                 double magnitude_tolerance) {
  std::vector<SignFlipCandidate> found;
  const Index window = 7LL * steps_per_day;
  for (Index c = 0; c < raw.values.cols(); ++c) {
    const auto col = raw.values.col(c);
    auto window_mean = [&](Index begin, Index end) {
      double sum = 0.0;
      Index n = 0;
      for (Index i = begin; i < end; ++i) {
        if (std::isfinite(col(i))) {
          sum += col(i);
          ++n;
        }
      }
      return n > (end - begin) / 2 ? sum / static_cast<double>(n) : kNaN;
    };
    SignFlipCandidate best;
    double best_score = 0.0;
    for (Index b = window; b + window <= raw.size(); b += steps_per_day) {
      const double before = window_mean(b - window, b);
      const double after = window_mean(b, b + window);
      if (!std::isfinite(before) || !std::isfinite(after)) continue;
      if (before * after >= 0.0) continue;
      const double mag = std::max(std::abs(before), std::abs(after));
      if (mag == 0.0) continue;
      const double mismatch = std::abs(std::abs(before) - std::abs(after)) / mag;
      if (mismatch > magnitude_tolerance) continue;
      const double score = mag * (1.0 - mismatch);
      if (score > best_score) {
        best_score = score;
        best = {raw.ids[static_cast<std::size_t>(c)], raw.start + b * raw.step_seconds, before, after};
      }
    }
    if (best_score > 0.0) found.push_back(best);
  }
  return found;
}

std::pair<TimeSeriesFrame, CleaningReport> clean_meters(const RawMeterTable& raw,
                                                        const CleaningOptions& options) {
  auto [selected, report] = select_meters(raw, options.min_span_seconds, options.max_gap);

  std::vector<SignCorrection> applicable;
  for (const auto& corr : options.corrections) {
    raw.meter_index(corr.meter);  // unknown ids are an error
    if (std::find(selected.ids.begin(), selected.ids.end(), corr.meter) != selected.ids.end()) {
      applicable.push_back(corr);
    } else {
      spdlog::warn("sign correction for discarded meter '{}' ignored", corr.meter);
    }
  }
  selected = apply_sign_corrections(selected, applicable, &report);

  std::vector<FilledSeries> filled;
  Index first = 0;
  Index last = selected.size() - 1;
  for (Index c = 0; c < selected.values.cols(); ++c) {
    std::span<const double> col(selected.values.col(c).data(), static_cast<std::size_t>(selected.size()));
    filled.push_back(fill_gaps_pchip(col));
    report.entry(selected.ids[static_cast<std::size_t>(c)]).interpolated = filled.back().interpolated;
    first = std::max(first, filled.back().first);
    last = std::min(last, filled.back().last);
  }

  // Trim to whole local days.
  const std::int64_t step = selected.step_seconds;
  const int spd = static_cast<int>(kSecondsPerDay / step);
  const std::int64_t offset = std::int64_t{options.utc_offset_minutes} * 60;
  auto step_of_day = [&](Index i) {
    const std::int64_t local = selected.start + i * step + offset;
    return static_cast<int>(((local % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay / step);
  };
  while (first <= last && step_of_day(first) != 0) ++first;
  const Index whole_days = (last - first + 1) / spd;
  if (whole_days < 1) throw DataError("common span of retained meters is shorter than one day");
  const Index count = whole_days * spd;

  Matrix values(count, static_cast<Index>(filled.size()));
  for (std::size_t c = 0; c < filled.size(); ++c) {
    for (Index i = 0; i < count; ++i) {
      values(i, static_cast<Index>(c)) = filled[c].values[static_cast<std::size_t>(first + i - filled[c].first)];
    }
  }
  TimeSeriesFrame frame(selected.start + first * step, step, selected.ids, std::move(values),
                        options.utc_offset_minutes);
  frame.set_holidays(options.holidays);
  return {std::move(frame), std::move(report)};
}

}  // namespace gridbench
