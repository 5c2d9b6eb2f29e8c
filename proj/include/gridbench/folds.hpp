#pragma once

#include <vector>

#include "gridbench/embedding.hpp"

namespace gridbench {

enum class DayRole { train, discard, test, unused };

/// Blocked cross-validation plan over whole days.
///
/// Each fold tiles the data with 10-day sequences starting at day offset
/// `fold`: days 1-7 train, day 8 is the test embedding window (discarded from
/// training), day 9 is tested and day 10 discarded. Row indices refer to a
/// SamplePair built from a frame that starts at local midnight.
struct FoldPlan {
  struct Fold {
    std::vector<int> sequence_start_days;
    std::vector<Index> train_rows;
    std::vector<Index> test_rows;
  };

  static constexpr int kSequenceDays = 10;
  static constexpr int kTrainDays = 7;
  static constexpr int kTestDayOffset = 8;  // zero-based position of the test day

  int k = 0;
  int span_days = 0;
  int steps_per_day = 0;
  int embed = 0;
  int horizon = 0;
  std::vector<Fold> folds;

  DayRole role(int fold, int day) const;
  /// Frame index of issue time for a SamplePair row.
  Index issue_index(Index row) const { return row + embed; }
};

FoldPlan build_folds(int span_days, const EmbeddingSpec& spec, int k, int steps_per_day);

}  // namespace gridbench
