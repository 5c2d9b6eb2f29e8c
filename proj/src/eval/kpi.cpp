#include "gridbench/kpi.hpp"

#include <cmath>
#include <limits>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::rmse: return "rmse";
    case Metric::mape: return "mape";
    case Metric::qs: return "qs";
  }
  return "unknown";
}

double KpiMatrix::mean() const {
  double s = 0.0;
  Index n = 0;
  for (Index d = 0; d < values.rows(); ++d)
    for (Index h = 0; h < values.cols(); ++h)
      if (present(d, h)) {
        s += values(d, h);
        ++n;
      }
  return n == 0 ? kNaN : s / static_cast<double>(n);
}

ErrorCube::ErrorCube(int steps_per_day, int horizon, int folds, double mape_floor)
    : spd_(steps_per_day), horizon_(horizon), folds_(folds), floor_(mape_floor) {
  if (steps_per_day < 1 || horizon < 1 || folds < 1) throw ConfigError("error cube dimensions must be positive");
  if (mape_floor < 0.0) throw ConfigError("MAPE floor must be non-negative");
  const auto size = static_cast<std::size_t>(steps_per_day) * static_cast<std::size_t>(horizon) * static_cast<std::size_t>(folds);
  sq_.assign(size, 0.0);
  ape_.assign(size, 0.0);
  n_.assign(size, 0);
  n_ape_.assign(size, 0);
}

std::size_t ErrorCube::at(int fold, int d, int h) const {
  if (fold < 0 || fold >= folds_ || d < 0 || d >= spd_ || h < 1 || h > horizon_) {
    throw DataError(fmt::format("error cube index (fold {}, d {}, h {}) out of range", fold, d, h));
  }
  return (static_cast<std::size_t>(fold) * static_cast<std::size_t>(spd_) + static_cast<std::size_t>(d)) *
             static_cast<std::size_t>(horizon_) +
         static_cast<std::size_t>(h - 1);
}

void ErrorCube::add(int fold, int d, int h, double error, double actual) {
  if (!std::isfinite(error) || !std::isfinite(actual)) throw DataError("non-finite error or actual");
  const std::size_t k = at(fold, d, h);
  sq_[k] += error * error;
  ++n_[k];
  if (std::abs(actual) < floor_) {
    ++excluded_;
  } else {
    ape_[k] += std::abs(error) / std::abs(actual);
    ++n_ape_[k];
  }
}

namespace {

template <class CellValue, class CellCount>
KpiMatrix fold_mean_map(const ErrorCube& cube, Metric metric, CellValue value, CellCount count) {
  KpiMatrix m;
  m.metric = metric;
  m.values = Matrix::Constant(cube.steps_per_day(), cube.horizon(), kNaN);
  m.present = Mask::Constant(cube.steps_per_day(), cube.horizon(), false);
  m.fold_counts = Eigen::MatrixXi::Zero(cube.steps_per_day(), cube.horizon());
  for (int d = 0; d < cube.steps_per_day(); ++d) {
    for (int h = 1; h <= cube.horizon(); ++h) {
      double s = 0.0;
      int folds = 0;
      for (int f = 0; f < cube.folds(); ++f) {
        const int n = count(f, d, h);
        if (n == 0) continue;
        s += value(f, d, h, n);
        ++folds;
      }
      if (folds > 0) {
        m.values(d, h - 1) = s / folds;
        m.present(d, h - 1) = true;
        m.fold_counts(d, h - 1) = folds;
      }
    }
  }
  return m;
}

}  // namespace

KpiMatrix rmse_map(const ErrorCube& cube) {
  return fold_mean_map(
      cube, Metric::rmse,
      [&](int f, int d, int h, int n) { return std::sqrt(cube.squared_sum(f, d, h) / n); },
      [&](int f, int d, int h) { return cube.count(f, d, h); });
}

KpiMatrix mape_map(const ErrorCube& cube) {
  return fold_mean_map(
      cube, Metric::mape,
      [&](int f, int d, int h, int n) { return 100.0 * cube.ape_sum(f, d, h) / n; },
      [&](int f, int d, int h) { return cube.ape_count(f, d, h); });
}

KpiMatrix normalize(const KpiMatrix& raw, const KpiMatrix& reference) {
  if (raw.values.rows() != reference.values.rows() || raw.values.cols() != reference.values.cols()) {
    throw DataError("normalization maps differ in shape");
  }
  KpiMatrix out = raw;
  out.normalized = true;
  for (Index d = 0; d < raw.values.rows(); ++d) {
    for (Index h = 0; h < raw.values.cols(); ++h) {
      if (!raw.present(d, h) || !reference.present(d, h)) {
        out.present(d, h) = false;
        out.values(d, h) = kNaN;
        continue;
      }
      const double a = raw.values(d, h);
      const double b = reference.values(d, h);
      if (b == 0.0) {
        out.present(d, h) = a == 0.0;
        out.values(d, h) = a == 0.0 ? 1.0 : kNaN;
      } else {
        out.values(d, h) = a / b;
      }
    }
  }
  return out;
}

Mask no_improvement_mask(const KpiMatrix& normalized) {
  if (!normalized.normalized) throw DataError("mask requires a normalized KPI map");
  Mask m = Mask::Constant(normalized.values.rows(), normalized.values.cols(), false);
  for (Index d = 0; d < m.rows(); ++d)
    for (Index h = 0; h < m.cols(); ++h) m(d, h) = normalized.present(d, h) && normalized.values(d, h) >= 1.0;
  return m;
}

Vector horizon_profile(const KpiMatrix& map) {
  Vector out(map.values.cols());
  for (Index h = 0; h < map.values.cols(); ++h) {
    double s = 0.0;
    int n = 0;
    for (Index d = 0; d < map.values.rows(); ++d)
      if (map.present(d, h)) {
        s += map.values(d, h);
        ++n;
      }
    out(h) = n == 0 ? kNaN : s / n;
  }
  return out;
}

Vector average_profile(const std::vector<Vector>& profiles) {
  if (profiles.empty()) return {};
  const Index H = profiles.front().size();
  Vector out(H);
  for (Index h = 0; h < H; ++h) {
    double s = 0.0;
    int n = 0;
    for (const auto& p : profiles) {
      if (p.size() != H) throw DataError("profiles differ in length");
      if (std::isfinite(p(h))) {
        s += p(h);
        ++n;
      }
    }
    out(h) = n == 0 ? kNaN : s / n;
  }
  return out;
}

double average_of_means(const std::vector<KpiMatrix>& maps) {
  double s = 0.0;
  int n = 0;
  for (const auto& m : maps) {
    const double v = m.mean();
    if (std::isfinite(v)) {
      s += v;
      ++n;
    }
  }
  return n == 0 ? kNaN : s / n;
}

Vector binned_reduction(const Vector& base_profile, const Vector& reconciled_profile, int bin_width) {
  if (bin_width < 1) throw ConfigError("bin width must be positive");
  if (base_profile.size() != reconciled_profile.size()) throw DataError("profiles differ in length");
  const Index H = base_profile.size();
  const Index bins = (H + bin_width - 1) / bin_width;
  Vector out(bins);
  for (Index b = 0; b < bins; ++b) {
    double sb = 0.0;
    double sr = 0.0;
    for (Index h = b * bin_width; h < std::min<Index>(H, (b + 1) * bin_width); ++h) {
      if (!std::isfinite(base_profile(h)) || !std::isfinite(reconciled_profile(h))) continue;
      sb += base_profile(h);
      sr += reconciled_profile(h);
    }
    out(b) = sb > 0.0 ? 1.0 - sr / sb : kNaN;
  }
  return out;
}

Vector relative_reduction(const Vector& base_profile, const Vector& reconciled_profile) {
  if (base_profile.size() != reconciled_profile.size()) throw DataError("profiles differ in length");
  Vector out(base_profile.size());
  for (Index h = 0; h < out.size(); ++h) {
    out(h) = base_profile(h) > 0.0 ? 1.0 - reconciled_profile(h) / base_profile(h) : kNaN;
  }
  return out;
}

}  // namespace gridbench
