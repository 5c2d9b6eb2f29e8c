#include "gridbench/hierarchy.hpp"

#include <spdlog/fmt/fmt.h>

namespace gridbench {

Hierarchy build_summation_matrix(int n_bottom, std::span<const int> group_counts,
                                 std::vector<std::string> bottom_names) {
  if (n_bottom < 1) throw ConfigError("hierarchy needs at least one bottom series");
  for (int groups : group_counts) {
    if (groups < 2 || groups >= n_bottom) {
      throw ConfigError(fmt::format("group count {} must lie in [2, n_bottom) for n_bottom = {}",
                                    groups, n_bottom));
    }
    if (n_bottom % groups != 0) {
      throw ConfigError(
          fmt::format("n_bottom = {} is not divisible by group count {}", n_bottom, groups));
    }
  }
  if (bottom_names.empty()) {
    for (int b = 0; b < n_bottom; ++b) bottom_names.push_back(fmt::format("node_{:02d}", b + 1));
  }
  if (static_cast<int>(bottom_names.size()) != n_bottom) {
    throw ConfigError("bottom name count does not match n_bottom");
  }

  Index rows = 1 + n_bottom;
  for (int groups : group_counts) rows += groups;

  Hierarchy h;
  h.n_bottom = n_bottom;
  h.summation = Matrix::Zero(rows, n_bottom);
  h.summation.row(0).setOnes();
  h.level.push_back(0);
  h.names.emplace_back("total");

  Index row = 1;
  int level = 1;
  for (int groups : group_counts) {
    const int width = n_bottom / groups;
    for (int g = 0; g < groups; ++g, ++row) {
      h.summation.block(row, g * width, 1, width).setOnes();
      h.level.push_back(level);
      h.names.push_back(fmt::format("agg{}_{}", groups, g + 1));
    }
    ++level;
  }
  h.summation.bottomRows(n_bottom).setIdentity();
  for (int b = 0; b < n_bottom; ++b) {
    h.level.push_back(level);
    h.names.push_back(bottom_names[static_cast<std::size_t>(b)]);
  }
  return h;
}

Matrix aggregate_bottom(const Matrix& bottom, const Hierarchy& hierarchy) {
  if (bottom.cols() != hierarchy.n_bottom) {
    throw DataError(fmt::format("bottom matrix has {} columns, hierarchy expects {}",
                                bottom.cols(), hierarchy.n_bottom));
  }
  return bottom * hierarchy.summation.transpose();
}

}  // namespace gridbench
