#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

/// Row-major matrix of feature bin codes.
struct BinnedMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::uint8_t> codes;

  const std::uint8_t* row(Index r) const { return codes.data() + r * cols; }
};

/// Per-feature quantile cut points. A value x falls in bin b = #(cuts < x),
/// so bin b <= s is equivalent to x <= cuts[s].
struct FeatureBinner {
  std::vector<std::vector<double>> cuts;

  static FeatureBinner fit(const Matrix& X, int max_bins);
  std::uint8_t bin(Index feature, double x) const;
  int bin_count(Index feature) const { return static_cast<int>(cuts[static_cast<std::size_t>(feature)].size()) + 1; }
  BinnedMatrix transform(const Matrix& X) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::Ref<const Vector>& x) const;
  double predict_binned(const std::uint8_t* codes) const;
  int leaf_count() const;
};

struct BoostedTreesOptions {
  int trees = 300;
  int max_leaves = 31;
  double learning_rate = 0.1;
  int min_leaf = 20;
  double lambda = 0.0;
  int max_bins = 64;
  /// Use every n-th training row.
  int row_stride = 1;
  double row_subsample = 1.0;
  double col_subsample = 1.0;
  std::uint64_t seed = 0;
};

struct BoostedTreesModel {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  /// Prediction with the first `tree_count` trees (all when negative).
  double predict(const Eigen::Ref<const Vector>& x, int tree_count = -1) const;
  double predict_binned(const std::uint8_t* codes) const;
};

/// Least-squares gradient boosting grown leaf-wise on histogram splits.
/// A non-empty `rows` restricts training to those rows of X (the stride
/// then applies within the subset).
BoostedTreesModel fit_boosted_trees(const BinnedMatrix& X, const FeatureBinner& binner,
                                    const Eigen::Ref<const Vector>& y,
                                    const BoostedTreesOptions& options, std::span<const Index> rows = {});

BoostedTreesModel fit_boosted_trees(const Matrix& X, const Eigen::Ref<const Vector>& y,
                                    const BoostedTreesOptions& options);

/// One model per target column, all sharing the binned inputs. Column j is
/// seeded from (options.seed, j) so refitting one column leaves the others
/// unchanged.
std::vector<BoostedTreesModel> fit_boosted_trees_miso(const BinnedMatrix& X,
                                                      const FeatureBinner& binner, const Matrix& Y,
                                                      const BoostedTreesOptions& options,
                                                      int workers = 1, std::span<const Index> rows = {});

}  // namespace gridbench
