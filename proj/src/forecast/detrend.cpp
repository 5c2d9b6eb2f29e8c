#include "gridbench/detrend.hpp"

#include <vector>

namespace gridbench {

namespace {

// Relative rank tolerance for deciding that a column adds no information.
constexpr double kRankTolerance = 1e-9;

}  // namespace

DetrendModel fit_detrend(std::span<const double> y, std::span<const double> ghi,
                         std::span<const double> temperature) {
  const auto n = static_cast<Index>(y.size());
  if (n < 3 || ghi.size() != y.size() || temperature.size() != y.size()) {
    throw DataError("detrend needs at least 3 aligned samples");
  }
  Matrix full(n, 3);
  Vector target(n);
  for (Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    full(i, 0) = ghi[u];
    full(i, 1) = temperature[u];
    full(i, 2) = 1.0;
    target(i) = y[u];
  }

  // Greedy rank check: intercept first, then GHI, then T.
  std::vector<int> kept{2};
  auto rank_of = [&](const std::vector<int>& cols) {
    Matrix sub(n, static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = full.col(cols[k]);
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    qr.setThreshold(kRankTolerance);
    return qr.rank();
  };
  for (int c : {0, 1}) {
    auto trial = kept;
    trial.push_back(c);
    if (rank_of(trial) == static_cast<Index>(trial.size())) kept = trial;
  }

  Matrix design(n, static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) design.col(static_cast<Index>(k)) = full.col(kept[k]);
  const Vector coef = design.colPivHouseholderQr().solve(target);

  DetrendModel model;
  model.dropped_ghi = true;
  model.dropped_temperature = true;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    model.beta[kept[k]] = coef(static_cast<Index>(k));
    if (kept[k] == 0) model.dropped_ghi = false;
    if (kept[k] == 1) model.dropped_temperature = false;
  }
  return model;
}

}  // namespace gridbench
