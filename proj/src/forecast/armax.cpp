#include "gridbench/armax.hpp"

#include <algorithm>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

bool ArmaxModel::stable() const {
  const Index p = phi.size();
  if (p == 0) return true;
  Matrix companion = Matrix::Zero(p, p);
  companion.row(0) = phi.transpose();
  for (Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  const Eigen::VectorXcd roots = companion.eigenvalues();
  for (Index i = 0; i < roots.size(); ++i) {
    if (!(std::abs(roots(i)) < 1.0)) return false;
  }
  return true;
}

namespace {

Vector least_squares(const Matrix& design, const Vector& target) {
  const Vector coef = design.colPivHouseholderQr().solve(target);
  if (!coef.allFinite()) throw NumericError("ARMAX least squares produced non-finite coefficients");
  return coef;
}

}  // namespace

ArmaxModel fit_armax_segment(std::span<const double> y, const Matrix& x, const ArmaxOrders& orders) {
  const auto n = static_cast<Index>(y.size());
  const int p = orders.ar;
  const int q = orders.ma;
  if (p < 0 || q < 0 || orders.long_ar < 0) throw ConfigError("ARMAX orders must be non-negative");
  if (x.rows() != n) throw DataError("ARMAX exogenous rows do not match the segment");
  if (n < 3 * (p + q) || n < 3) {
    throw DataError(fmt::format("ARMAX segment of {} samples is shorter than {}", n, 3 * (p + q)));
  }
  const Index nx = x.cols();

  // Stage 1: long autoregression, its residuals stand in for the innovations.
  Vector eps = Vector::Zero(n);
  const int L = q > 0 ? std::max(orders.long_ar, p + q) : 0;
  if (q > 0) {
    const Index rows = n - L;
    if (rows < L + nx + 1) throw DataError("ARMAX segment too short for the long autoregression");
    Matrix design(rows, L + nx);
    Vector target(rows);
    for (Index r = 0; r < rows; ++r) {
      const Index t = L + r;
      for (int i = 1; i <= L; ++i) design(r, i - 1) = y[static_cast<std::size_t>(t - i)];
      design.block(r, L, 1, nx) = x.row(t);
      target(r) = y[static_cast<std::size_t>(t)];
    }
    const Vector coef = least_squares(design, target);
    eps.tail(rows) = target - design * coef;
  }

  // Stage 2: joint regression on lagged outputs, lagged innovations and x.
  const Index start = L + std::max(p, q);
  const Index rows = n - start;
  const Index width = p + q + nx;
  if (rows < width + 1) throw DataError("ARMAX segment too short for the joint regression");
  Matrix design(rows, width);
  Vector target(rows);
  for (Index r = 0; r < rows; ++r) {
    const Index t = start + r;
    for (int i = 1; i <= p; ++i) design(r, i - 1) = y[static_cast<std::size_t>(t - i)];
    for (int i = 1; i <= q; ++i) design(r, p + i - 1) = eps(t - i);
    design.block(r, p + q, 1, nx) = x.row(t);
    target(r) = y[static_cast<std::size_t>(t)];
  }
  const Vector coef = least_squares(design, target);
  ArmaxModel model;
  model.phi = coef.head(p);
  model.theta = coef.segment(p, q);
  model.beta = coef.tail(nx);
  return model;
}

ArmaxEnsemble fit_armax_ensemble(std::span<const ArmaxSegment> segments, const ArmaxOrders& orders) {
  ArmaxEnsemble ensemble;
  ensemble.orders = orders;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    ArmaxModel m = fit_armax_segment(segments[s].y, segments[s].x, orders);
    if (!m.stable()) {
      spdlog::warn("ARMAX segment {} has an unstable AR polynomial, dropped from the ensemble", s);
      ++ensemble.dropped;
      continue;
    }
    ensemble.members.push_back(std::move(m));
  }
  if (ensemble.members.empty()) throw NumericError("every ARMAX segment fit was unstable");
  return ensemble;
}

Vector armax_forecast(const ArmaxModel& model, std::span<const double> y_history,
                      const Matrix& x_history, const Matrix& x_future) {
  const Index p = model.phi.size();
  const Index q = model.theta.size();
  const Index nx = model.beta.size();
  const auto n = static_cast<Index>(y_history.size());
  if (x_history.rows() != n || x_history.cols() != nx || x_future.cols() != nx) {
    throw DataError("ARMAX exogenous matrices do not match the model");
  }
  if (n < std::max(p, q)) throw DataError("ARMAX history shorter than the model orders");

  const Index h = x_future.rows();
  std::vector<double> y(static_cast<std::size_t>(n + h));
  std::vector<double> eps(static_cast<std::size_t>(n + h), 0.0);
  std::copy(y_history.begin(), y_history.end(), y.begin());

  auto predict = [&](Index t, const auto& x_row) {
    double v = x_row.dot(model.beta);
    for (Index i = 1; i <= p; ++i) v += model.phi(i - 1) * y[static_cast<std::size_t>(t - i)];
    for (Index i = 1; i <= q; ++i) v += model.theta(i - 1) * eps[static_cast<std::size_t>(t - i)];
    return v;
  };

  for (Index t = std::max(p, q); t < n; ++t) {
    eps[static_cast<std::size_t>(t)] = y[static_cast<std::size_t>(t)] - predict(t, x_history.row(t));
  }
  Vector out(h);
  for (Index j = 0; j < h; ++j) {
    const Index t = n + j;
    y[static_cast<std::size_t>(t)] = predict(t, x_future.row(j));
    out(j) = y[static_cast<std::size_t>(t)];
  }
  return out;
}

Vector armax_ensemble_forecast(const ArmaxEnsemble& ensemble, std::span<const double> y_history,
                               const Matrix& x_history, const Matrix& x_future) {
  if (ensemble.members.empty()) throw NumericError("ARMAX ensemble has no members");
  Vector sum = Vector::Zero(x_future.rows());
  for (const auto& m : ensemble.members) sum += armax_forecast(m, y_history, x_history, x_future);
  return sum / static_cast<double>(ensemble.members.size());
}

}  // namespace gridbench
