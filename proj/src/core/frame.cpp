#include "gridbench/frame.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw DataError(fmt::format("malformed timestamp '{}'", text));
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len) {
    throw DataError(fmt::format("malformed timestamp '{}'", text));
  }
  return value;
}

}  // namespace

TimeSeriesFrame::TimeSeriesFrame(Timestamp start, std::int64_t step_seconds,
                                 std::vector<std::string> names, Matrix values,
                                 int utc_offset_minutes)
    : start_(start),
      step_(step_seconds),
      utc_offset_minutes_(utc_offset_minutes),
      names_(std::move(names)),
      values_(std::move(values)) {
  if (step_ <= 0 || kSecondsPerDay % step_ != 0) {
    throw DataError(fmt::format("step of {} s does not divide a day", step_));
  }
  if (static_cast<Index>(names_.size()) != values_.cols()) {
    throw DataError(fmt::format("{} column names for {} columns", names_.size(), values_.cols()));
  }
  std::vector<std::string> sorted = names_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DataError("duplicate column names in frame");
  }
  if (!values_.allFinite()) throw DataError("frame contains missing or non-finite values");
}

Index TimeSeriesFrame::index_of(Timestamp ts) const {
  const std::int64_t offset = ts - start_;
  if (offset < 0 || offset % step_ != 0 || offset / step_ >= size()) {
    throw DataError(fmt::format("timestamp {} not on the frame grid", format_iso8601(ts)));
  }
  return static_cast<Index>(offset / step_);
}

bool TimeSeriesFrame::has_column(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Index TimeSeriesFrame::column_index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError(fmt::format("unknown column '{}'", name));
  return static_cast<Index>(it - names_.begin());
}

Eigen::Ref<const Vector> TimeSeriesFrame::column(std::string_view name) const {
  return values_.col(column_index(name));
}

int TimeSeriesFrame::step_of_day(Index i) const {
  const std::int64_t local = timestamp(i) + std::int64_t{utc_offset_minutes_} * 60;
  return static_cast<int>(floor_mod(local, kSecondsPerDay) / step_);
}

int TimeSeriesFrame::day_of_week(Index i) const {
  // 1970-01-01 was a Thursday.
  return static_cast<int>(floor_mod(local_day(i) + 3, 7));
}

LocalDay TimeSeriesFrame::local_day(Index i) const {
  return local_day_of(timestamp(i), utc_offset_minutes_);
}

TimeSeriesFrame TimeSeriesFrame::with_column(const std::string& name, const Vector& values) const {
  if (values.size() != size()) throw DataError("column length does not match frame");
  std::vector<std::string> names = names_;
  Matrix data = values_;
  auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) {
    data.col(it - names.begin()) = values;
  } else {
    names.push_back(name);
    data.conservativeResize(Eigen::NoChange, data.cols() + 1);
    data.col(data.cols() - 1) = values;
  }
  TimeSeriesFrame out(start_, step_, std::move(names), std::move(data), utc_offset_minutes_);
  out.holidays_ = holidays_;
  return out;
}

TimeSeriesFrame TimeSeriesFrame::select(const std::vector<std::string>& names) const {
  Matrix data(size(), static_cast<Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) data.col(static_cast<Index>(c)) = column(names[c]);
  TimeSeriesFrame out(start_, step_, names, std::move(data), utc_offset_minutes_);
  out.holidays_ = holidays_;
  return out;
}

TimeSeriesFrame TimeSeriesFrame::slice(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > size()) throw DataError("slice out of range");
  TimeSeriesFrame out(timestamp(begin), step_, names_, values_.middleRows(begin, count),
                      utc_offset_minutes_);
  out.holidays_ = holidays_;
  return out;
}

LocalDay local_day_of(Timestamp ts, int utc_offset_minutes) {
  return floor_div(ts + std::int64_t{utc_offset_minutes} * 60, kSecondsPerDay);
}

LocalDay parse_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw DataError(fmt::format("malformed date '{}'", text));
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int(text, 0, 4)},
                           month{static_cast<unsigned>(parse_int(text, 5, 2))},
                           day{static_cast<unsigned>(parse_int(text, 8, 2))}};
  if (!ymd.ok()) throw DataError(fmt::format("invalid date '{}'", text));
  return sys_days{ymd}.time_since_epoch().count();
}

Timestamp parse_iso8601(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  const LocalDay day = parse_date(text);
  std::int64_t seconds = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') throw DataError(fmt::format("malformed timestamp '{}'", text));
    const int hh = parse_int(text, 11, 2);
    if (text.size() < 16 || text[13] != ':') throw DataError(fmt::format("malformed timestamp '{}'", text));
    const int mm = parse_int(text, 14, 2);
    int ss = 0;
    std::size_t pos = 16;
    if (text.size() > 16 && text[16] == ':') {
      ss = parse_int(text, 17, 2);
      pos = 19;
    }
    const std::string_view rest = text.substr(pos);
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
      throw DataError(fmt::format("only UTC timestamps are accepted, got '{}'", text));
    }
    if (hh > 23 || mm > 59 || ss > 59) throw DataError(fmt::format("invalid time in '{}'", text));
    seconds = hh * 3600 + mm * 60 + ss;
  }
  return day * kSecondsPerDay + seconds;
}

std::string format_iso8601(Timestamp ts) {
  using namespace std::chrono;
  const std::int64_t day = floor_div(ts, kSecondsPerDay);
  const std::int64_t sec = ts - day * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{day}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     sec / 3600, (sec / 60) % 60, sec % 60);
}

}  // namespace gridbench
