#include "gridbench/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace gridbench {

KnnModel fit_knn(const Matrix& X, const Matrix& Y, const KnnOptions& options) {
  if (X.rows() != Y.rows()) throw DataError("KNN features and targets differ in row count");
  if (X.rows() < 1) throw DataError("KNN needs at least one training row");
  if (options.k < 1) throw ConfigError("KNN neighbour count must be positive");
  KnnModel m;
  const auto n = static_cast<double>(X.rows());
  m.mean = X.colwise().mean().transpose();
  m.scale = ((X.rowwise() - m.mean.transpose()).colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Index c = 0; c < m.scale.size(); ++c)
    if (!(m.scale(c) > 0.0)) m.scale(c) = 1.0;
  m.features = (X.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
  m.targets = Y;
  m.k = options.k;
  if (m.k > X.rows()) {
    spdlog::warn("KNN neighbour count {} exceeds {} training rows, clamped", m.k, X.rows());
    m.k = static_cast<int>(X.rows());
  }
  return m;
}

KnnNeighbours knn_neighbours(const KnnModel& model, const Eigen::Ref<const Vector>& query,
                             Index exclude) {
  if (query.size() != model.features.cols()) throw DataError("KNN query width does not match the model");
  const Vector z = (query - model.mean).cwiseQuotient(model.scale);
  const Vector dist2 = (model.features.rowwise() - z.transpose()).rowwise().squaredNorm();

  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(dist2.size()));
  for (Index i = 0; i < dist2.size(); ++i)
    if (i != exclude) order.push_back(i);
  if (order.empty()) throw DataError("KNN has no candidate rows");
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(model.k), order.size());
  auto closer = [&](Index a, Index b) { return dist2(a) < dist2(b) || (dist2(a) == dist2(b) && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
  order.resize(k);

  KnnNeighbours out;
  if (dist2(order.front()) == 0.0) {
    for (Index i : order)
      if (dist2(i) == 0.0) out.rows.push_back(i);
    out.weights.assign(out.rows.size(), 1.0 / static_cast<double>(out.rows.size()));
    return out;
  }
  out.rows = order;
  out.weights.resize(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out.weights[i] = 1.0 / std::sqrt(dist2(order[i]));
    total += out.weights[i];
  }
  for (double& w : out.weights) w /= total;
  return out;
}

KnnPrediction knn_forecast(const KnnModel& model, const Eigen::Ref<const Vector>& query,
                           const QuantileGrid& grid, Index exclude) {
  const KnnNeighbours nb = knn_neighbours(model, query, exclude);
  const Index H = model.targets.cols();
  KnnPrediction out;
  out.point = Vector::Zero(H);
  out.quantiles.resize(H, static_cast<Index>(grid.size()));
  std::vector<double> values(nb.rows.size());
  for (Index j = 0; j < H; ++j) {
    for (std::size_t i = 0; i < nb.rows.size(); ++i) {
      values[i] = model.targets(nb.rows[i], j);
      out.point(j) += nb.weights[i] * values[i];
    }
    for (std::size_t a = 0; a < grid.size(); ++a) {
      out.quantiles(j, static_cast<Index>(a)) = weighted_quantile(values, nb.weights, grid[a]);
    }
    Vector row = out.quantiles.row(j).transpose();
    repair_crossings(row);
    out.quantiles.row(j) = row.transpose();
  }
  return out;
}

}  // namespace gridbench
