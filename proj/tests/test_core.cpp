#include <doctest.h>

#include <atomic>
#include <set>

#include "gridbench/folds.hpp"
#include "gridbench/hierarchy.hpp"
#include "gridbench/parallel.hpp"
#include "test_util.hpp"

using namespace gridbench;

namespace {

TimeSeriesFrame ramp_frame(Index n, Timestamp start = 0) {
  Matrix v(n, 1);
  for (Index i = 0; i < n; ++i) v(i, 0) = static_cast<double>(i + 1);
  return TimeSeriesFrame(start, kDefaultStepSeconds, {"y"}, v);
}

}  // namespace

TEST_CASE("frame calendar in local time") {
  // 1970-01-01 was a Thursday.
  const TimeSeriesFrame f = ramp_frame(300);
  CHECK(f.step_of_day(0) == 0);
  CHECK(f.step_of_day(145) == 1);
  CHECK(f.day_of_week(0) == 3);
  CHECK(f.day_of_week(144 * 4) == 0);
  CHECK(f.index_of(f.timestamp(17)) == 17);
  CHECK_THROWS_AS(f.index_of(f.timestamp(17) + 1), DataError);

  const TimeSeriesFrame shifted(0, kDefaultStepSeconds, {"y"}, Matrix::Zero(10, 1), 60);
  CHECK(shifted.step_of_day(0) == 6);
  CHECK(parse_iso8601("2018-01-16T00:00:00Z") == 1516060800);
  CHECK(format_iso8601(1516060800) == "2018-01-16T00:00:00Z");
}

TEST_CASE("summation matrix for the 24-node plan") {
  const std::vector<int> plan{2, 4};
  const Hierarchy h = build_summation_matrix(24, plan);
  REQUIRE(h.size() == 31);
  CHECK(h.n_upper() == 7);
  CHECK(h.summation.row(0).sum() == 24);
  CHECK(h.summation.row(1).sum() == 12);
  CHECK(h.summation.row(2).sum() == 12);
  for (int r = 3; r < 7; ++r) CHECK(h.summation.row(r).sum() == 6);
  CHECK(h.summation.bottomRows(24).isIdentity());
  for (Index c = 0; c < 24; ++c) CHECK(h.summation.col(c).sum() == 4);
  CHECK(h.level_count() == 4);
}

TEST_CASE("summation matrix small plans") {
  SUBCASE("n_bottom 8, plan (2, 4)") {
    const std::vector<int> plan{2, 4};
    const Hierarchy h = build_summation_matrix(8, plan);
    Matrix bottom(1, 8);
    for (int i = 0; i < 8; ++i) bottom(0, i) = i + 1;
    const Matrix all = aggregate_bottom(bottom, h);
    CHECK(all(0, 0) == 36);
    CHECK(all(0, 1) == 10);
    CHECK(all(0, 2) == 26);
    CHECK(all(0, 3) == 3);
    CHECK(all(0, 4) == 7);
    CHECK(all(0, 5) == 11);
    CHECK(all(0, 6) == 15);
  }
  SUBCASE("n_bottom 2, no intermediate level") {
    const Hierarchy h = build_summation_matrix(2, {});
    Matrix expected(3, 2);
    expected << 1, 1, 1, 0, 0, 1;
    CHECK(h.summation == expected);
    Matrix bottom(1, 2);
    bottom << 3, 4;
    const Matrix all = aggregate_bottom(bottom, h);
    CHECK(all(0, 0) == 7);
    CHECK(all(0, 1) == 3);
    CHECK(all(0, 2) == 4);
  }
  CHECK_THROWS_AS(build_summation_matrix(6, std::vector<int>{4}), ConfigError);
}

TEST_CASE("aggregation matches independent row sums") {
  const std::vector<int> plan{2, 4};
  const Hierarchy h = build_summation_matrix(24, plan);
  const Matrix bottom = testutil::random_matrix(5, 24, 3);
  const Matrix all = aggregate_bottom(bottom, h);
  for (Index r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (Index c = 0; c < 24; ++c) sum += bottom(r, c);
    CHECK(all(r, 0) == doctest::Approx(sum).epsilon(1e-12));
  }
  CHECK((all.leftCols(h.n_upper()) - bottom * h.upper().transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(aggregate_bottom(Matrix::Zero(4, 24), h).isZero());
}

TEST_CASE("hankel embedding of a short ramp") {
  EmbeddingSpec spec;
  spec.horizon = 2;
  spec.embed = 2;
  spec.calendar = {};
  const SamplePair p = hankel_embed(ramp_frame(10), "y", spec);
  REQUIRE(p.rows() == 6);
  CHECK(p.X.cols() == 2);
  CHECK(p.Y(0, 0) == 4);
  CHECK(p.Y(0, 1) == 5);
  CHECK(p.X(0, 0) == 2);
  CHECK(p.X(0, 1) == 3);
  CHECK(p.issue_index.front() == 2);
}

TEST_CASE("embedding properties") {
  EmbeddingSpec spec;
  spec.horizon = 6;
  spec.embed = 4;
  const Index T = 144 * 2;

  SUBCASE("constant series") {
    const TimeSeriesFrame f(0, kDefaultStepSeconds, {"y"}, Matrix::Constant(T, 1, 7.5));
    const SamplePair p = hankel_embed(f, "y", spec);
    CHECK(p.rows() == T - 6 - 4);
    CHECK((p.X.leftCols(4).array() == 7.5).all());
    CHECK((p.Y.array() == 7.5).all());
  }
  SUBCASE("causality and bijectivity") {
    const TimeSeriesFrame f = ramp_frame(T);
    const SamplePair p = hankel_embed(f, "y", spec);
    for (Index r = 0; r < p.rows(); ++r) {
      const Index t = p.issue_index[static_cast<std::size_t>(r)];
      // Ramp values are index + 1, so values encode the instant they came from.
      CHECK(p.X.row(r).head(4).maxCoeff() - 1 <= t);
      CHECK(p.Y.row(r).minCoeff() - 1 > t);
      CHECK(p.X(r, 3) == f.column("y")(t));
      CHECK(p.X(r, 4) == f.step_of_day(t));
    }
  }
  SUBCASE("time shift") {
    const SamplePair a = hankel_embed(ramp_frame(T), "y", spec);
    const SamplePair b = hankel_embed(ramp_frame(T, 600), "y", spec);
    CHECK(a.X.leftCols(4) == b.X.leftCols(4));
    CHECK(a.Y == b.Y);
    for (std::size_t i = 0; i < a.issue_times.size(); ++i) CHECK(b.issue_times[i] == a.issue_times[i] + 600);
  }
  SUBCASE("calendar at issue time") {
    const SamplePair p = hankel_embed(ramp_frame(T), "y", spec);
    const Index t = p.issue_index[10];
    CHECK(p.X(10, p.layout.calendar_offset + 1) == 3);  // Thursday
    CHECK(p.row_of_issue(t) == 10);
  }
}

TEST_CASE("fold plan with one fold over 30 days") {
  EmbeddingSpec spec;
  const FoldPlan plan = build_folds(30, spec, 1, 144);
  REQUIRE(plan.folds.size() == 1);
  CHECK(plan.folds[0].sequence_start_days.size() == 3);
  std::set<int> train_days, test_days;
  for (int d = 0; d < 30; ++d) {
    if (plan.role(0, d) == DayRole::train) train_days.insert(d);
    if (plan.role(0, d) == DayRole::test) test_days.insert(d);
  }
  CHECK(train_days.size() == 21);
  CHECK(test_days.size() == 3);
  CHECK(plan.folds[0].test_rows.size() == 3);
}

TEST_CASE("fold hygiene over a 100 day plan") {
  EmbeddingSpec spec;
  const int e = spec.embed, h = spec.horizon;
  const FoldPlan plan = build_folds(100, spec, 10, 144);
  REQUIRE(plan.folds.size() == 10);
  std::set<int> all_test_days;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    REQUIRE(!fold.train_rows.empty());
    REQUIRE(!fold.test_rows.empty());
    // Test windows sorted by start; each training window must miss all of them.
    std::vector<std::pair<Index, Index>> test_windows;
    std::set<int> days;
    for (Index r : fold.test_rows) {
      const Index t = plan.issue_index(r);
      test_windows.emplace_back(t - e + 1, t + h);
      CHECK(days.insert(static_cast<int>((t + 1) / 144)).second);
      all_test_days.insert(static_cast<int>((t + 1) / 144));
    }
    long overlaps = 0;
    for (Index r : fold.train_rows) {
      const Index t = plan.issue_index(r);
      const Index lo = t - e + 1, hi = t + h;
      for (const auto& [tl, th] : test_windows) overlaps += (lo <= th && tl <= hi) ? 1 : 0;
    }
    CHECK(overlaps == 0);
  }
  // Across folds the tested days sweep the whole span except the first
  // embedding-and-training days of the earliest sequence.
  CHECK(all_test_days.size() >= 90);
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw DataError("boom");
                  }),
                  DataError);
}
