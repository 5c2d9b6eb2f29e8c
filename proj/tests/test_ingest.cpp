#include <doctest.h>

#include <cmath>
#include <limits>

#include "gridbench/cleaning.hpp"
#include "gridbench/csv.hpp"
#include "gridbench/nwp.hpp"
#include "gridbench/synthetic.hpp"
#include "test_util.hpp"

using namespace gridbench;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RawMeterTable meters(Index rows, int count) {
  RawMeterTable raw;
  raw.start = 1516060800;
  raw.step_seconds = kDefaultStepSeconds;
  for (int i = 0; i < count; ++i) raw.ids.push_back("m" + std::to_string(i));
  raw.values.resize(rows, count);
  for (Index r = 0; r < rows; ++r)
    for (int c = 0; c < count; ++c) raw.values(r, c) = 10.0 + std::sin(0.01 * static_cast<double>(r) + c);
  return raw;
}

NwpTable::Record record(Timestamp issue, Timestamp valid, double t) { return {issue, valid, {t}}; }

}  // namespace

TEST_CASE("meter selection by gap length and span") {
  RawMeterTable raw = meters(1000, 3);
  for (Index r = 100; r < 107; ++r) raw.values(r, 0) = kNaN;  // 7 missing
  for (Index r = 200; r < 206; ++r) raw.values(r, 1) = kNaN;  // exactly 6 missing
  auto [kept, report] = select_meters(raw, 0, 6);
  CHECK(kept.ids == std::vector<std::string>{"m1", "m2"});
  CHECK_FALSE(report.entry("m0").retained);
  CHECK(report.entry("m0").max_gap == 7);
  CHECK(report.entry("m1").retained);
  CHECK(report.entry("m1").max_gap == 6);
  CHECK(report.meters.size() == 3);

  for (Index r = 100; r < 107; ++r) raw.values(r, 1) = raw.values(r, 2) = kNaN;
  CHECK_THROWS_AS(select_meters(raw, 0, 6), DataError);
}

TEST_CASE("thirteen gap-free months are retained under the one-year rule") {
  const Index rows = 395 * 144;
  const RawMeterTable raw = meters(rows, 1);
  auto [kept, report] = select_meters(raw, 365LL * kSecondsPerDay, 6);
  CHECK(kept.ids.size() == 1);
  const RawMeterTable short_raw = meters(300 * 144, 1);
  CHECK_THROWS_AS(select_meters(short_raw, 365LL * kSecondsPerDay, 6), DataError);
}

TEST_CASE("pchip gap filling") {
  SUBCASE("linear ramp is reproduced") {
    std::vector<double> y{0, 1, 2, kNaN, kNaN, 5, 6, 7};
    const FilledSeries f = fill_gaps_pchip(y);
    CHECK(f.interpolated == 2);
    CHECK(f.values[3] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.values[4] == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("monotone data stays monotone and inside the envelope") {
    std::vector<double> y{0, 0.1, 0.5, kNaN, kNaN, kNaN, 4.0, 4.1, 10};
    const FilledSeries f = fill_gaps_pchip(y);
    for (std::size_t i = 1; i < f.values.size(); ++i) CHECK(f.values[i] >= f.values[i - 1]);
    for (std::size_t i = 3; i < 6; ++i) {
      CHECK(f.values[i] >= 0.5);
      CHECK(f.values[i] <= 4.0);
    }
  }
  SUBCASE("single point between flat neighbours") {
    // Flat outer slopes force zero derivatives at the gap ends, so the
    // Hermite cubic evaluated at the midpoint gives the average.
    std::vector<double> y{2.0, 2.0, kNaN, 4.0, 4.0};
    const FilledSeries f = fill_gaps_pchip(y);
    CHECK(f.values[2] >= 2.0);
    CHECK(f.values[2] <= 4.0);
    CHECK(f.values[2] == doctest::Approx(3.0));
  }
  SUBCASE("boundary gaps are trimmed") {
    std::vector<double> y{kNaN, kNaN, 1, 2, 3, kNaN};
    const FilledSeries f = fill_gaps_pchip(y);
    CHECK(f.first == 2);
    CHECK(f.last == 4);
    CHECK(f.values == std::vector<double>{1, 2, 3});
  }
}

TEST_CASE("sign corrections") {
  RawMeterTable raw;
  raw.start = 0;
  raw.ids = {"a"};
  raw.values.resize(4, 1);
  raw.values << 1, 1, -1, -1;
  CHECK(apply_sign_corrections(raw, {}).values == raw.values);
  const SignCorrection onward{"a", 2 * kDefaultStepSeconds, true};
  const RawMeterTable fixed = apply_sign_corrections(raw, {onward});
  CHECK((fixed.values.array() == 1.0).all());
  CHECK(apply_sign_corrections(fixed, {onward}).values == raw.values);
  const SignCorrection before{"a", 2 * kDefaultStepSeconds, false};
  CHECK((apply_sign_corrections(raw, {before}).values.array() == -1.0).all());
  CHECK_THROWS_AS(apply_sign_corrections(raw, {SignCorrection{"zz", 0, true}}), DataError);
}

TEST_CASE("sign flip detector reports candidates without applying them") {
  RawMeterTable raw = meters(144 * 28, 1);
  for (Index r = 144 * 14; r < raw.size(); ++r) raw.values(r, 0) = -raw.values(r, 0);
  const RawMeterTable copy = raw;
  const auto candidates = detect_sign_flips(raw, 144);
  REQUIRE(!candidates.empty());
  CHECK(candidates.front().meter == "m0");
  CHECK(candidates.front().instant == raw.start + 144 * 14 * kDefaultStepSeconds);
  CHECK(raw.values == copy.values);
}

TEST_CASE("full cleaning yields a gap-free frame of whole days") {
  RawMeterTable raw = meters(144 * 5 + 50, 2);
  raw.start += 3600;  // not midnight
  raw.values(300, 0) = kNaN;
  raw.values(301, 0) = kNaN;
  CleaningOptions options;
  options.min_span_seconds = 0;
  auto [frame, report] = clean_meters(raw, options);
  CHECK(frame.starts_at_midnight());
  CHECK(frame.size() % 144 == 0);
  CHECK(frame.values().allFinite());
  CHECK(report.entry("m0").interpolated == 2);
}

TEST_CASE("nwp alignment") {
  const Timestamp h0 = 1516060800;
  SUBCASE("constant hourly temperature") {
    NwpTable t;
    t.variables = {"T"};
    for (int k = 0; k <= 3; ++k) t.records.push_back(record(h0, h0 + k * 3600, 5.0));
    const NwpTable a = align_nwp(t, 600, h0, h0, h0 + 3 * 3600);
    REQUIRE(a.records.size() == 19);
    for (const auto& r : a.records) CHECK(r.values[0] == 5.0);
  }
  SUBCASE("hourly ramp interpolates linearly") {
    NwpTable t;
    t.variables = {"T"};
    t.records = {record(h0, h0, 10.0), record(h0, h0 + 3600, 16.0)};
    const NwpTable a = align_nwp(t, 600, h0, h0, h0 + 3600);
    REQUIRE(a.records.size() == 7);
    for (int i = 0; i <= 6; ++i) CHECK(a.records[static_cast<std::size_t>(i)].values[0] == doctest::Approx(10.0 + i));
  }
  SUBCASE("fresher issuance wins, future issuances are never used") {
    NwpTable t;
    t.variables = {"T"};
    const Timestamp valid = h0 + 24 * 3600;
    for (Timestamp v : {valid - 3600, valid, valid + 3600}) {
      t.records.push_back(record(h0, v, 1.0));
      t.records.push_back(record(h0 + 12 * 3600, v, 2.0));
      t.records.push_back(record(h0 + 20 * 3600, v, 3.0));
    }
    const AlignedNwp nwp(t);
    CHECK(nwp.value("T", h0 + 13 * 3600, valid) == 2.0);
    CHECK(nwp.issuance_used(h0 + 13 * 3600, valid) == h0 + 12 * 3600);
    CHECK(nwp.value("T", h0 + 21 * 3600, valid) == 3.0);
    CHECK(nwp.value("T", h0 + 3600, valid) == 1.0);
    for (Timestamp issue = h0; issue < valid; issue += 600) CHECK(nwp.issuance_used(issue, valid) <= issue);
  }
  SUBCASE("uncovered interval is an error") {
    NwpTable t;
    t.variables = {"T"};
    t.records = {record(h0, h0, 1.0), record(h0, h0 + 3600, 1.0)};
    CHECK_THROWS_AS(align_nwp(t, 600, h0, h0, h0 + 7200), DataError);
  }
  SUBCASE("lookahead records are rejected") {
    NwpTable t;
    t.variables = {"T"};
    t.records = {record(h0 + 3600, h0, 1.0)};
    CHECK_THROWS_AS(t.validate(), DataError);
  }
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.n_bottom = 4;
  spec.days = 28;
  SUBCASE("deterministic for a seed") {
    const SyntheticData a = generate_synthetic(spec);
    const SyntheticData b = generate_synthetic(spec);
    CHECK(a.loads.values() == b.loads.values());
    CHECK(a.nwp.records.size() == b.nwp.records.size());
    spec.seed = 2;
    CHECK(generate_synthetic(spec).loads.values() != a.loads.values());
  }
  SUBCASE("zero noise is weekly periodic") {
    spec.noise = 0.0;
    const Matrix v = generate_synthetic(spec).loads.values();
    CHECK((v.topRows(v.rows() - 1008) - v.bottomRows(v.rows() - 1008)).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("mean near the configured scale") {
    const SyntheticData d = generate_synthetic(spec);
    CHECK(d.loads.values().mean() == doctest::Approx(81.0).epsilon(0.10));
    CHECK(d.loads.starts_at_midnight());
    CHECK(d.loads.size() == 28 * 144);
    d.nwp.validate();
  }
}

TEST_CASE("csv round trips") {
  testutil::TempDir dir("ingest_csv");
  std::vector<Timestamp> ts{1516060800, 1516061400, 1516062000};
  Matrix v(3, 2);
  v << 1.5, kNaN, -2.25, 3.0, 1e-7, 4.0;
  write_wide_csv(dir.path() / "w.csv", "timestamp", {"a", "b"}, ts, v);
  const WideTable t = read_wide_csv(dir.path() / "w.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.timestamps == ts);
  CHECK(std::isnan(t.values(0, 1)));
  CHECK(t.values(1, 0) == -2.25);
  CHECK(t.values(2, 0) == 1e-7);

  SyntheticSpec spec;
  spec.n_bottom = 2;
  spec.days = 3;
  const NwpTable nwp = generate_synthetic(spec).nwp;
  nwp.write_csv(dir.path() / "nwp.csv");
  const NwpTable back = NwpTable::from_csv(dir.path() / "nwp.csv");
  CHECK(back.variables == nwp.variables);
  REQUIRE(back.records.size() == nwp.records.size());
  CHECK(back.records[5].issue == nwp.records[5].issue);
  CHECK(back.records[5].values[1] == doctest::Approx(nwp.records[5].values[1]));
}
