#include "gridbench/folds.hpp"

#include <spdlog/fmt/fmt.h>

namespace gridbench {

DayRole FoldPlan::role(int fold, int day) const {
  const int start = fold;
  if (day < start) return DayRole::unused;
  const int seq = (day - start) / kSequenceDays;
  const int pos = (day - start) % kSequenceDays;
  if (start + (seq + 1) * kSequenceDays > span_days) return DayRole::unused;
  if (pos < kTrainDays) return DayRole::train;
  if (pos == kTestDayOffset) return DayRole::test;
  return DayRole::discard;
}

FoldPlan build_folds(int span_days, const EmbeddingSpec& spec, int k, int steps_per_day) {
  spec.validate();
  if (k < 1) throw ConfigError("fold count must be >= 1");
  if (steps_per_day < 1) throw ConfigError("steps_per_day must be >= 1");
  if (span_days < FoldPlan::kSequenceDays + k) {
    throw DataError(fmt::format("span of {} days too short for {} folds (need >= {})", span_days,
                                k, FoldPlan::kSequenceDays + k));
  }
  if (spec.embed > steps_per_day || spec.horizon > steps_per_day) {
    throw ConfigError("embedding and horizon must not exceed one day for day-blocked folds");
  }

  FoldPlan plan;
  plan.k = k;
  plan.span_days = span_days;
  plan.steps_per_day = steps_per_day;
  plan.embed = spec.embed;
  plan.horizon = spec.horizon;

  const Index spd = steps_per_day;
  const Index e = spec.embed;
  const Index h = spec.horizon;
  const Index total = static_cast<Index>(span_days) * spd;
  const Index row_count = total - h - e;

  for (int f = 0; f < k; ++f) {
    FoldPlan::Fold fold;
    for (int start = f; start + FoldPlan::kSequenceDays <= span_days;
         start += FoldPlan::kSequenceDays) {
      fold.sequence_start_days.push_back(start);
      const Index train_begin = start * spd;
      const Index train_end = (start + FoldPlan::kTrainDays) * spd;  // exclusive
      // Whole window [t-e+1, t+h] inside the training days.
      for (Index t = train_begin + e - 1; t + h < train_end; ++t) {
        const Index row = t - e;
        if (row >= 0 && row < row_count) fold.train_rows.push_back(row);
      }
      // Embedding inside day 8, targets inside day 9.
      const Index embed_day_begin = (start + FoldPlan::kTrainDays) * spd;
      const Index test_day_begin = (start + FoldPlan::kTestDayOffset) * spd;
      const Index test_day_end = test_day_begin + spd;
      for (Index t = embed_day_begin + e - 1; t < test_day_begin; ++t) {
        if (t + 1 < test_day_begin || t + h >= test_day_end) continue;
        const Index row = t - e;
        if (row >= 0 && row < row_count) fold.test_rows.push_back(row);
      }
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace gridbench
