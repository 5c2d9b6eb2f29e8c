#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridbench/types.hpp"

namespace gridbench {

/// Aggregation structure of a two-or-more level hierarchy.
///
/// Rows of `summation` are ordered top level first and bottom level last, so
/// the trailing n_bottom rows form the identity. `level[i]` is 0 for the top
/// row and increases towards the bottom.
struct Hierarchy {
  int n_bottom = 0;
  Matrix summation;
  std::vector<int> level;
  std::vector<std::string> names;

  Index size() const { return summation.rows(); }
  Index n_upper() const { return summation.rows() - n_bottom; }
  int level_count() const { return level.empty() ? 0 : level.back() + 1; }
  /// Upper block A of S (aggregation rows only).
  Matrix upper() const { return summation.topRows(n_upper()); }
  bool is_bottom(Index row) const { return row >= n_upper(); }
};

/// Builds S = [1'; I_g1 (x) 1'_{n/g1}; ...; I_n] for the given group counts.
/// The default plan for 24 bottom series is {2, 4}, giving 31 rows.
Hierarchy build_summation_matrix(int n_bottom, std::span<const int> group_counts,
                                 std::vector<std::string> bottom_names = {});

/// Y_all = bottom * S'. `bottom` is T x n_bottom.
Matrix aggregate_bottom(const Matrix& bottom, const Hierarchy& hierarchy);

}  // namespace gridbench
