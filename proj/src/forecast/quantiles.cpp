#include "gridbench/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

QuantileGrid::QuantileGrid(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw ConfigError("quantile grid is empty");
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (!(alphas_[i] > 0.0 && alphas_[i] < 1.0)) {
      throw ConfigError(fmt::format("quantile level {} outside (0, 1)", alphas_[i]));
    }
    if (i > 0 && !(alphas_[i] > alphas_[i - 1])) throw ConfigError("quantile levels must increase");
  }
}

QuantileGrid QuantileGrid::evenly_spaced(int count, double lo, double hi) {
  if (count < 1) throw ConfigError("quantile grid needs at least one level");
  std::vector<double> a(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    // Snap to 12 decimals so 0.23 is stored as 0.23, not 0.22999999999999998.
    a[static_cast<std::size_t>(i)] = std::round(x * 1e12) / 1e12;
  }
  return QuantileGrid(std::move(a));
}

double sorted_quantile(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double pos = alpha * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha) {
  if (values.empty() || values.size() != weights.size()) throw DataError("weighted quantile: bad input");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DataError("weighted quantile: weights sum to zero");
  double cum = 0.0;
  double prev_p = 0.0;
  double prev_v = values[order.front()];
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double w = weights[order[k]] / total;
    const double p = cum + 0.5 * w;
    const double v = values[order[k]];
    if (alpha <= p) {
      if (k == 0 || p == prev_p) return v;
      const double t = (alpha - prev_p) / (p - prev_p);
      return prev_v + t * (v - prev_v);
    }
    cum += w;
    prev_p = p;
    prev_v = v;
  }
  return prev_v;
}

void repair_crossings(Eigen::Ref<Vector> fan_row) {
  std::sort(fan_row.data(), fan_row.data() + fan_row.size());
}

ErrorBank::ErrorBank(int horizon, int steps_per_day)
    : horizon_(horizon),
      steps_per_day_(steps_per_day),
      cells_(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(steps_per_day)),
      pooled_(static_cast<std::size_t>(horizon)) {
  if (horizon < 1 || steps_per_day < 1) throw ConfigError("error bank dimensions must be positive");
}

std::vector<double>& ErrorBank::cell(int h, int d) {
  if (h < 1 || h > horizon_ || d < 0 || d >= steps_per_day_) {
    throw DataError(fmt::format("error bank cell ({}, {}) out of range", h, d));
  }
  return cells_[static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(steps_per_day_) +
                static_cast<std::size_t>(d)];
}

const std::vector<double>& ErrorBank::cell(int h, int d) const {
  return const_cast<ErrorBank*>(this)->cell(h, d);
}

void ErrorBank::add(int h, int d, double residual) {
  cell(h, d).push_back(-residual);
  pooled_[static_cast<std::size_t>(h - 1)].push_back(-residual);
  finalized_ = false;
}

void ErrorBank::add_row(int d, std::span<const double> residuals) {
  if (static_cast<int>(residuals.size()) != horizon_) throw DataError("residual row width mismatch");
  for (int h = 1; h <= horizon_; ++h) add(h, d, residuals[static_cast<std::size_t>(h - 1)]);
}

void ErrorBank::finalize() {
  for (auto& c : cells_) std::sort(c.begin(), c.end());
  for (auto& c : pooled_) std::sort(c.begin(), c.end());
  finalized_ = true;
}

double ErrorBank::shift(int h, int d, double alpha) const {
  if (!finalized_) throw DataError("error bank queried before finalize()");
  const auto& c = cell(h, d);
  if (!c.empty()) return sorted_quantile(c, alpha);
  const auto& pooled = pooled_[static_cast<std::size_t>(h - 1)];
  if (pooled.empty()) throw DataError(fmt::format("error bank has no residuals for step ahead {}", h));
  static thread_local int warned = 0;
  if (warned++ < 5) spdlog::warn("error bank cell (h={}, d={}) empty; using pooled residuals", h, d);
  return sorted_quantile(pooled, alpha);
}

Matrix empirical_quantiles(const ErrorBank& bank, const QuantileGrid& grid, const Vector& point,
                           int d) {
  if (point.size() != bank.horizon()) throw DataError("point forecast length differs from bank horizon");
  Matrix fan(point.size(), static_cast<Index>(grid.size()));
  for (Index h = 0; h < point.size(); ++h) {
    for (std::size_t a = 0; a < grid.size(); ++a) {
      fan(h, static_cast<Index>(a)) = point(h) + bank.shift(static_cast<int>(h) + 1, d, grid[a]);
    }
    Vector row = fan.row(h).transpose();
    repair_crossings(row);
    fan.row(h) = row.transpose();
  }
  return fan;
}

}  // namespace gridbench
