#include "gridbench/boosted_trees.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <spdlog/fmt/fmt.h>

#include "gridbench/parallel.hpp"

namespace gridbench {

FeatureBinner FeatureBinner::fit(const Matrix& X, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw ConfigError(fmt::format("max_bins {} outside [2, 256]", max_bins));
  if (X.rows() < 1) throw DataError("cannot bin an empty matrix");
  FeatureBinner b;
  b.cuts.resize(static_cast<std::size_t>(X.cols()));
  std::vector<double> v(static_cast<std::size_t>(X.rows()));
  for (Index c = 0; c < X.cols(); ++c) {
    for (Index r = 0; r < X.rows(); ++r) v[static_cast<std::size_t>(r)] = X(r, c);
    std::sort(v.begin(), v.end());
    std::vector<double> distinct = v;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto& cuts = b.cuts[static_cast<std::size_t>(c)];
    if (static_cast<int>(distinct.size()) <= max_bins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) cuts.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    } else {
      for (int k = 1; k < max_bins; ++k) {
        const double cut = v[v.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(max_bins)];
        if (cut < distinct.back() && (cuts.empty() || cut > cuts.back())) cuts.push_back(cut);
      }
    }
  }
  return b;
}

std::uint8_t FeatureBinner::bin(Index feature, double x) const {
  const auto& c = cuts[static_cast<std::size_t>(feature)];
  return static_cast<std::uint8_t>(std::lower_bound(c.begin(), c.end(), x) - c.begin());
}

BinnedMatrix FeatureBinner::transform(const Matrix& X) const {
  if (X.cols() != static_cast<Index>(cuts.size())) throw DataError("binner width does not match the matrix");
  BinnedMatrix out;
  out.rows = X.rows();
  out.cols = X.cols();
  out.codes.resize(static_cast<std::size_t>(X.rows() * X.cols()));
  for (Index r = 0; r < X.rows(); ++r)
    for (Index c = 0; c < X.cols(); ++c) out.codes[static_cast<std::size_t>(r * X.cols() + c)] = bin(c, X(r, c));
  return out;
}

double RegressionTree::predict(const Eigen::Ref<const Vector>& x) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

double RegressionTree::predict_binned(const std::uint8_t* codes) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = codes[node.feature] <= node.bin ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

double BoostedTreesModel::predict(const Eigen::Ref<const Vector>& x, int tree_count) const {
  const std::size_t m = tree_count < 0 ? trees.size() : std::min(trees.size(), static_cast<std::size_t>(tree_count));
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += trees[i].predict(x);
  return base + learning_rate * s;
}

double BoostedTreesModel::predict_binned(const std::uint8_t* codes) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict_binned(codes);
  return base + learning_rate * s;
}

namespace {

struct Split {
  double gain = 0.0;
  int feature = -1;
  int bin = 0;
};

struct Bin {
  double grad = 0.0;
  double count = 0.0;
};

/// Column-major codes of the active training rows, indexed 0..rows-1.
struct ColumnCodes {
  Index rows = 0;
  std::vector<std::uint8_t> codes;

  ColumnCodes(const BinnedMatrix& X, const std::vector<Index>& active)
      : rows(static_cast<Index>(active.size())), codes(static_cast<std::size_t>(rows * X.cols)) {
    for (Index i = 0; i < rows; ++i) {
      const std::uint8_t* src = X.row(active[static_cast<std::size_t>(i)]);
      for (Index c = 0; c < X.cols; ++c) codes[static_cast<std::size_t>(c * rows + i)] = src[c];
    }
  }
  const std::uint8_t* col(Index c) const { return codes.data() + c * rows; }
};

struct Leaf {
  int node = 0;
  std::vector<Index> rows;
  std::vector<Bin> hist;  // per (selected feature, bin)
  double sum = 0.0;
  Split best;
};

class TreeGrower {
 public:
  TreeGrower(const ColumnCodes& columns, const FeatureBinner& binner, const std::vector<int>& features,
             const BoostedTreesOptions& o)
      : columns_(columns), binner_(binner), features_(features), o_(o) {
    for (int f : features_) stride_ = std::max(stride_, static_cast<std::size_t>(binner_.bin_count(f)));
  }

  /// When `leaf_values` is given, each grown row receives its leaf value.
  RegressionTree grow(const std::vector<Index>& rows, const std::vector<double>& residual,
                      std::vector<double>* leaf_values = nullptr) {
    residual_ = &residual;
    leaf_values_ = leaf_values;
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<Leaf> leaves;
    leaves.emplace_back();
    Leaf& root = leaves.back();
    root.rows = rows;
    build_histogram(root);
    find_split(root);

    while (static_cast<int>(leaves.size()) < o_.max_leaves) {
      std::size_t pick = leaves.size();
      double best_gain = 1e-12;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].best.feature >= 0 && leaves[i].best.gain > best_gain) {
          best_gain = leaves[i].best.gain;
          pick = i;
        }
      }
      if (pick == leaves.size()) break;

      Leaf parent = std::move(leaves[pick]);
      const Split s = parent.best;
      Leaf left, right;
      for (Index r : parent.rows) {
        (columns_.col(s.feature)[r] <= s.bin ? left.rows : right.rows).push_back(r);
      }
      Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
      Leaf& large = left.rows.size() <= right.rows.size() ? right : left;
      build_histogram(small);
      large.hist = std::move(parent.hist);
      for (std::size_t i = 0; i < large.hist.size(); ++i) {
        large.hist[i].grad -= small.hist[i].grad;
        large.hist[i].count -= small.hist[i].count;
      }
      large.sum = parent.sum - small.sum;

      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = s.feature;
      node.bin = s.bin;
      node.threshold = binner_.cuts[static_cast<std::size_t>(s.feature)][static_cast<std::size_t>(s.bin)];
      node.left = l;
      node.right = l + 1;
      left.node = l;
      right.node = l + 1;
      find_split(left);
      find_split(right);
      leaves[pick] = std::move(left);
      leaves.push_back(std::move(right));
    }

    for (const Leaf& leaf : leaves) {
      const double value = leaf.sum / (static_cast<double>(leaf.rows.size()) + o_.lambda);
      tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
      if (leaf_values_) {
        for (Index r : leaf.rows) (*leaf_values_)[static_cast<std::size_t>(r)] = value;
      }
    }
    return tree;
  }

 private:
  void build_histogram(Leaf& leaf) const {
    leaf.hist.assign(features_.size() * stride_, Bin{});
    double sum = 0.0;
    for (Index r : leaf.rows) sum += (*residual_)[static_cast<std::size_t>(r)];
    leaf.sum = sum;
    const double* g = residual_->data();
    for (std::size_t f = 0; f < features_.size(); ++f) {
      const std::uint8_t* col = columns_.col(features_[f]);
      Bin* hist = leaf.hist.data() + f * stride_;
      for (Index r : leaf.rows) {
        Bin& b = hist[col[r]];
        b.grad += g[r];
        b.count += 1.0;
      }
    }
  }

  void find_split(Leaf& leaf) const {
    leaf.best = Split{};
    const auto n = static_cast<double>(leaf.rows.size());
    if (n < 2.0 * o_.min_leaf) return;
    const double parent_score = leaf.sum * leaf.sum / (n + o_.lambda);
    for (std::size_t f = 0; f < features_.size(); ++f) {
      const int bins = binner_.bin_count(features_[f]);
      double gl = 0.0;
      double nl = 0.0;
      for (int b = 0; b + 1 < bins; ++b) {
        const std::size_t k = f * stride_ + static_cast<std::size_t>(b);
        gl += leaf.hist[k].grad;
        nl += leaf.hist[k].count;
        const double nr = n - nl;
        if (nl < o_.min_leaf) continue;
        if (nr < o_.min_leaf) break;
        const double gr = leaf.sum - gl;
        const double gain = gl * gl / (nl + o_.lambda) + gr * gr / (nr + o_.lambda) - parent_score;
        if (gain > leaf.best.gain) leaf.best = Split{gain, features_[f], b};
      }
    }
  }

  const ColumnCodes& columns_;
  const FeatureBinner& binner_;
  const std::vector<int>& features_;
  const BoostedTreesOptions& o_;
  const std::vector<double>* residual_ = nullptr;
  std::vector<double>* leaf_values_ = nullptr;
  std::size_t stride_ = 1;
};

void check_options(const BoostedTreesOptions& o) {
  if (o.trees < 0 || o.max_leaves < 2 || o.min_leaf < 1 || !(o.learning_rate > 0.0) || o.lambda < 0.0 ||
      o.row_stride < 1 || !(o.row_subsample > 0.0 && o.row_subsample <= 1.0) ||
      !(o.col_subsample > 0.0 && o.col_subsample <= 1.0)) {
    throw ConfigError("invalid boosted-trees options");
  }
}

}  // namespace

BoostedTreesModel fit_boosted_trees(const BinnedMatrix& X, const FeatureBinner& binner,
                                    const Eigen::Ref<const Vector>& y,
                                    const BoostedTreesOptions& options, std::span<const Index> rows_subset) {
  check_options(options);
  if (X.rows != y.size()) throw DataError("boosted trees: feature and target rows differ");
  if (X.cols != static_cast<Index>(binner.cuts.size())) throw DataError("boosted trees: binner width mismatch");

  std::vector<Index> active;
  if (rows_subset.empty()) {
    for (Index r = 0; r < X.rows; r += options.row_stride) active.push_back(r);
  } else {
    for (std::size_t i = 0; i < rows_subset.size(); i += static_cast<std::size_t>(options.row_stride)) {
      if (rows_subset[i] < 0 || rows_subset[i] >= X.rows) throw DataError("boosted trees: row subset out of range");
      active.push_back(rows_subset[i]);
    }
  }
  if (active.size() < 2) throw DataError("boosted trees need at least 2 training rows");

  BoostedTreesModel model;
  model.learning_rate = options.learning_rate;
  double mean = 0.0;
  for (Index r : active) mean += y(r);
  model.base = mean / static_cast<double>(active.size());

  const std::size_t m = active.size();
  std::vector<double> residual(m);
  bool constant = true;
  for (std::size_t i = 0; i < m; ++i) {
    residual[i] = y(active[i]) - model.base;
    if (residual[i] != 0.0) constant = false;
  }
  if (constant) return model;
  const ColumnCodes columns(X, active);
  std::vector<Index> local(m);
  std::iota(local.begin(), local.end(), Index{0});

  std::mt19937_64 rng(options.seed);
  std::vector<int> all_features(static_cast<std::size_t>(X.cols));
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto n_cols = std::max<std::size_t>(
      1, static_cast<std::size_t>(options.col_subsample * static_cast<double>(X.cols) + 0.5));
  const auto n_rows = std::max<std::size_t>(
      2, static_cast<std::size_t>(options.row_subsample * static_cast<double>(m) + 0.5));

  std::vector<int> features;
  std::vector<Index> rows;
  std::vector<double> fitted(m);
  for (int t = 0; t < options.trees; ++t) {
    if (n_cols < all_features.size()) {
      std::vector<int> shuffled = all_features;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      features.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_cols));
      std::sort(features.begin(), features.end());
    } else {
      features = all_features;
    }
    if (n_rows < m) {
      rows = local;
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(n_rows);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = local;
    }

    TreeGrower grower(columns, binner, features, options);
    const bool all_rows = rows.size() == m;
    RegressionTree tree = grower.grow(rows, residual, all_rows ? &fitted : nullptr);
    if (tree.nodes.size() == 1 && tree.nodes.front().value == 0.0) break;
    for (std::size_t i = 0; i < m; ++i) {
      const double f = all_rows ? fitted[i] : tree.predict_binned(X.row(active[i]));
      residual[i] -= options.learning_rate * f;
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

BoostedTreesModel fit_boosted_trees(const Matrix& X, const Eigen::Ref<const Vector>& y,
                                    const BoostedTreesOptions& options) {
  const FeatureBinner binner = FeatureBinner::fit(X, options.max_bins);
  return fit_boosted_trees(binner.transform(X), binner, y, options);
}

std::vector<BoostedTreesModel> fit_boosted_trees_miso(const BinnedMatrix& X,
                                                      const FeatureBinner& binner, const Matrix& Y,
                                                      const BoostedTreesOptions& options, int workers,
                                                      std::span<const Index> rows_subset) {
  std::vector<BoostedTreesModel> models(static_cast<std::size_t>(Y.cols()));
  parallel_for(static_cast<std::size_t>(Y.cols()), workers, [&](std::size_t j) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(j)};
    std::uint32_t words[2];
    seq.generate(std::begin(words), std::end(words));
    BoostedTreesOptions o = options;
    o.seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    models[j] = fit_boosted_trees(X, binner, Y.col(static_cast<Index>(j)), o, rows_subset);
  });
  return models;
}

}  // namespace gridbench
