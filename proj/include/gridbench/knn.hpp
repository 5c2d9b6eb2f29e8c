#pragma once

#include <vector>

#include "gridbench/quantiles.hpp"
#include "gridbench/types.hpp"

namespace gridbench {

struct KnnOptions {
  int k = 50;
};

/// Nearest-neighbour regressor on standardized features.
///
/// Every step-ahead model shares the same inputs, so the neighbour set is
/// computed once per query and column j of `targets` serves step j.
struct KnnModel {
  Vector mean;
  Vector scale;
  Matrix features;  // standardized training rows
  Matrix targets;   // one column per step ahead
  int k = 0;
};

struct KnnNeighbours {
  std::vector<Index> rows;
  std::vector<double> weights;  // sum to 1
};

struct KnnPrediction {
  Vector point;
  Matrix quantiles;  // steps ahead x alphas
};

/// Standardization uses the training rows only; constant features keep unit
/// scale. K larger than the row count is clamped with a warning.
KnnModel fit_knn(const Matrix& X, const Matrix& Y, const KnnOptions& options);

/// Inverse-distance weighted neighbours of a raw feature row. Exact matches
/// take all the weight, shared evenly. `exclude` drops one training row.
KnnNeighbours knn_neighbours(const KnnModel& model, const Eigen::Ref<const Vector>& query,
                             Index exclude = -1);

KnnPrediction knn_forecast(const KnnModel& model, const Eigen::Ref<const Vector>& query,
                           const QuantileGrid& grid, Index exclude = -1);

}  // namespace gridbench
