#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gridbench/armax.hpp"
#include "gridbench/boosted_trees.hpp"
#include "gridbench/cv.hpp"
#include "gridbench/detrend.hpp"
#include "gridbench/folds.hpp"
#include "gridbench/holt_winters.hpp"
#include "gridbench/knn.hpp"
#include "gridbench/model_io.hpp"
#include "gridbench/nwp.hpp"
#include "gridbench/persistence.hpp"
#include "gridbench/quantiles.hpp"
#include "gridbench/synthetic.hpp"
#include "test_util.hpp"

using namespace gridbench;

namespace {

std::vector<double> ar1(int n, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  std::vector<double> y(static_cast<std::size_t>(n));
  double prev = 0.0;
  for (auto& v : y) v = prev = phi * prev + eps(rng);
  return y;
}

TimeSeriesFrame small_frame(int days, std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.n_bottom = 2;
  spec.days = days;
  spec.seed = seed;
  return generate_synthetic(spec).loads;
}

ForecastSettings light_settings() {
  ForecastSettings s;
  s.embedding.calendar = {CalendarFeature::step_of_day};
  s.hw.samples = 10;
  s.knn.k = 5;
  s.trees.trees = 5;
  s.trees.max_leaves = 4;
  s.trees.row_stride = 8;
  s.trees.max_bins = 16;
  s.armax_daily_harmonics = 1;
  s.armax_weekly_harmonics = 0;
  return s;
}

}  // namespace

TEST_CASE("seasonal persistence") {
  std::vector<double> periodic(144 * 4);
  for (std::size_t i = 0; i < periodic.size(); ++i) periodic[i] = std::sin(0.3 * static_cast<double>(i % 144));
  for (Index t : {Index{143}, Index{200}, Index{431}}) {
    const Vector f = persistence_forecast(periodic, t, 144, 144);
    for (int j = 1; j <= 144; ++j) CHECK(f[j - 1] == periodic[static_cast<std::size_t>(t + j)]);
  }
  const std::vector<double> flat(400, 7.5);
  CHECK((persistence_forecast(flat, 300, 50, 144).array() == 7.5).all());
  CHECK_THROWS(persistence_forecast(flat, 100, 10, 144));
}

TEST_CASE("quantile grid and helpers") {
  const QuantileGrid g;
  REQUIRE(g.size() == 11);
  CHECK(g[0] == doctest::Approx(0.05));
  CHECK(g[10] == doctest::Approx(0.95));
  CHECK_THROWS(QuantileGrid({0.5, 0.2}));
  CHECK_THROWS(QuantileGrid({0.0, 0.5}));
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(sorted_quantile(s, 0.5) == doctest::Approx(2.5));
  CHECK(sorted_quantile(s, 0.0) == 1);
  CHECK(sorted_quantile(s, 1.0) == 4);
  Vector row(3);
  row << 3, 1, 2;
  repair_crossings(row);
  CHECK(row[0] == 1);
  CHECK(row[2] == 3);
}

TEST_CASE("error bank shifts") {
  SUBCASE("median of a symmetric cell") {
    ErrorBank bank(1, 1);
    for (double e : {-1.0, 0.0, 1.0}) bank.add(1, 0, e);
    bank.finalize();
    CHECK(bank.shift(1, 0, 0.5) == 0.0);
  }
  SUBCASE("zero residuals collapse the fan") {
    ErrorBank bank(3, 2);
    for (int k = 0; k < 5; ++k) bank.add_row(1, std::vector<double>{0, 0, 0});
    bank.finalize();
    Vector point(3);
    point << 1, 2, 3;
    const Matrix fan = empirical_quantiles(bank, QuantileGrid(), point, 1);
    for (Index c = 0; c < fan.cols(); ++c) CHECK(fan.col(c) == point);
  }
  SUBCASE("gaussian residuals give the normal quantile") {
    ErrorBank bank(1, 1);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) bank.add(1, 0, n(rng));
    bank.finalize();
    CHECK(std::abs(bank.shift(1, 0, 0.95) - 1.645) < 0.05);
    CHECK(std::abs(bank.shift(1, 0, 0.05) + 1.645) < 0.05);
  }
  SUBCASE("empty cells fall back to the pooled residuals of the step") {
    ErrorBank bank(1, 4);
    for (double e : {-2.0, 2.0}) bank.add(1, 0, e);
    bank.finalize();
    CHECK(bank.cell_empty(1, 3));
    CHECK(bank.shift(1, 3, 0.5) == bank.shift(1, 0, 0.5));
  }
}

TEST_CASE("error bank calibration and monotone fans on training residuals") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> skew(2.0, 1.0);
  const int H = 3, D = 4;
  ErrorBank bank(H, D);
  std::vector<std::vector<double>> kept(static_cast<std::size_t>(H * D));
  for (int d = 0; d < D; ++d)
    for (int i = 0; i < 37 + 10 * d; ++i)
      for (int h = 1; h <= H; ++h) {
        const double e = skew(rng) - 2.0 * h;
        bank.add(h, d, e);
        kept[static_cast<std::size_t>((h - 1) * D + d)].push_back(e);
      }
  bank.finalize();
  const QuantileGrid grid;
  for (int h = 1; h <= H; ++h)
    for (int d = 0; d < D; ++d) {
      const auto& cell = kept[static_cast<std::size_t>((h - 1) * D + d)];
      const double n = static_cast<double>(cell.size());
      double prev = -1e300;
      for (double a : grid.alphas()) {
        const double q = bank.shift(h, d, a);
        CHECK(q >= prev);
        prev = q;
        // actual = point - e falls below point + q when -e < q
        double below = 0;
        for (double e : cell) below += (-e < q) ? 1.0 : 0.0;
        CHECK(std::abs(below / n - a) <= 1.0 / n + 1e-12);
      }
    }
}

TEST_CASE("detrend regression") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 30);
  std::vector<double> T(200), ghi(200, 0.0), y(200);
  for (std::size_t i = 0; i < T.size(); ++i) {
    T[i] = u(rng);
    y[i] = 2.0 * T[i] + 5.0;
  }
  const DetrendModel m = fit_detrend(y, ghi, T);
  CHECK(m.dropped_ghi);
  CHECK(m.beta[0] == 0.0);
  CHECK(m.beta[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.beta[2] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(m.invert(m.apply(17.0, 1.0, 3.0), 1.0, 3.0) == doctest::Approx(17.0));

  std::normal_distribution<double> n(0, 1);
  for (std::size_t i = 0; i < T.size(); ++i) {
    ghi[i] = u(rng) * 20;
    y[i] = 50 + n(rng);
  }
  const DetrendModel flat = fit_detrend(y, ghi, T);
  CHECK(std::abs(flat.beta[0]) < 0.01);
  CHECK(std::abs(flat.beta[1]) < 0.05);
  CHECK(flat.beta.allFinite());
}

TEST_CASE("holt-winters recursion") {
  const HwConfig cfg{4, 8, false};
  SUBCASE("alpha one and frozen seasonals give level persistence") {
    HwState s;
    s.s1.assign(4, 0.0);
    s.s2.assign(8, 0.0);
    const HwSmoothing w{1.0, 0.0, 0.0, 0.0};
    for (double y : {3.0, 8.0, -1.0, 4.5}) {
      hw_update(s, w, cfg, y);
      for (int h = 1; h <= 5; ++h) CHECK(hw_point(s, cfg, h) == y);
    }
  }
  SUBCASE("periodic series with gamma1 one is learned after one period") {
    const std::vector<double> pattern{1.0, 5.0, 2.0, 7.0};
    HwState s;
    s.s1.assign(4, 0.0);
    s.s2.assign(8, 0.0);
    const HwSmoothing w{0.0, 0.0, 1.0, 0.0};
    Index t = 0;
    for (; t < 4; ++t) hw_update(s, w, cfg, pattern[static_cast<std::size_t>(t % 4)]);
    for (; t < 16; ++t) {
      CHECK(hw_point(s, cfg, 1) == doctest::Approx(pattern[static_cast<std::size_t>(t % 4)]).epsilon(1e-14));
      hw_update(s, w, cfg, pattern[static_cast<std::size_t>(t % 4)]);
    }
  }
  SUBCASE("constant series stays constant") {
    HwParams p;
    p.config = cfg;
    p.per_step.assign(6, HwSmoothing{0.3, 0.1, 0.4, 0.2});
    const std::vector<double> y(40, 12.5);
    const Vector f = hw_forecast(p, y, 0);
    for (Index j = 0; j < f.size(); ++j) CHECK(f[j] == doctest::Approx(12.5).epsilon(1e-12));
  }
  SUBCASE("literal decay switch only touches the weekly state") {
    HwConfig literal = cfg;
    literal.literal_s2_decay = true;
    HwState a = hw_initial_state_from_samples(std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7},
                                              std::vector<double>{1, 2, 3, 4, 2, 3, 4, 5}, cfg);
    HwState b = a;
    const HwSmoothing w{0.3, 0.0, 0.2, 0.6};
    hw_update(a, w, cfg, 4.0);
    hw_update(b, w, literal, 4.0);
    CHECK(a.level == b.level);
    CHECK(a.s1 == b.s1);
    CHECK(a.s2 != b.s2);
  }
}

TEST_CASE("holt-winters fitting keeps weights in range") {
  const HwConfig cfg{4, 8, false};
  std::vector<double> y(400);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 0.1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 10 + (i % 4) + 0.5 * ((i / 4) % 2) + n(rng);
  const HwState seed = hw_initial_state_from_history(y, 0, cfg);
  std::vector<Index> issues;
  for (Index t = 100; t < 390; t += 3) issues.push_back(t);
  HwFitOptions opt;
  opt.samples = 40;
  const auto w = fit_holt_winters(y, issues, 32, 3, seed, cfg, opt);
  REQUIRE(w.size() == 3);
  for (const auto& s : w) {
    for (double v : {s.alpha, s.beta, s.gamma1, s.gamma2}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(s.beta == 0.0);
  }
}

TEST_CASE("armax estimation") {
  SUBCASE("AR(1) coefficient") {
    const auto y = ar1(1000, 0.8, 7);
    const ArmaxModel m = fit_armax_segment(y, Matrix(1000, 0), ArmaxOrders{1, 0, 10});
    REQUIRE(m.phi.size() == 1);
    CHECK(std::abs(m.phi[0] - 0.8) < 0.05);
    CHECK(m.stable());
  }
  SUBCASE("exogenous gain") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 1);
    Matrix x(800, 1);
    std::vector<double> y(800);
    double prev = 0;
    for (int i = 0; i < 800; ++i) {
      x(i, 0) = n(rng);
      y[static_cast<std::size_t>(i)] = prev = 0.5 * prev + 2.0 * x(i, 0) + 0.1 * n(rng);
    }
    const ArmaxModel m = fit_armax_segment(y, x, ArmaxOrders{1, 1, 10});
    CHECK(std::abs(m.beta[0] - 2.0) < 0.05);
    CHECK(std::abs(m.phi[0] - 0.5) < 0.05);
  }
  SUBCASE("ensemble of one and of identical members") {
    const auto y = ar1(600, 0.6, 3);
    const ArmaxOrders o{2, 1, 10};
    std::vector<ArmaxSegment> seg{{y, Matrix(600, 0)}};
    const ArmaxEnsemble one = fit_armax_ensemble(seg, o);
    REQUIRE(one.members.size() == 1);
    const std::span<const double> hist(y.data(), 500);
    const Vector single = armax_forecast(one.members[0], hist, Matrix(500, 0), Matrix(10, 0));
    CHECK(armax_ensemble_forecast(one, hist, Matrix(500, 0), Matrix(10, 0)) == single);
    ArmaxEnsemble many = one;
    many.members.assign(5, one.members[0]);
    const Vector avg = armax_ensemble_forecast(many, hist, Matrix(500, 0), Matrix(10, 0));
    CHECK((avg - single).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unstable fits are dropped") {
    ArmaxModel m;
    m.phi = Vector::Constant(1, 1.2);
    CHECK_FALSE(m.stable());
    m.phi[0] = 0.9;
    CHECK(m.stable());
  }
}

TEST_CASE("knn regressor") {
  SUBCASE("exact match returns its target") {
    const Matrix X = testutil::random_matrix(30, 3, 1);
    const Matrix Y = testutil::random_matrix(30, 2, 2);
    const KnnModel m = fit_knn(X, Y, KnnOptions{5});
    const KnnPrediction p = knn_forecast(m, X.row(7).transpose(), QuantileGrid());
    CHECK(p.point[0] == Y(7, 0));
    CHECK(p.point[1] == Y(7, 1));
    const KnnNeighbours nb = knn_neighbours(m, X.row(7).transpose(), 7);
    for (Index r : nb.rows) CHECK(r != 7);
  }
  SUBCASE("k equal to rows with uniform distances gives the plain mean") {
    Matrix X(4, 1);
    X << -1, 1, -1, 1;
    Matrix Y(4, 1);
    Y << 1, 2, 3, 10;
    const KnnModel m = fit_knn(X, Y, KnnOptions{4});
    CHECK(knn_forecast(m, Vector::Zero(1), QuantileGrid()).point[0] == doctest::Approx(4.0));
  }
  SUBCASE("inverse-distance weights") {
    // Raw distances 1 and 3 stay in ratio after standardization.
    Matrix X(2, 1);
    X << 1, 5;
    Matrix Y(2, 1);
    Y << 0, 10;
    const KnnModel m = fit_knn(X, Y, KnnOptions{2});
    const KnnNeighbours nb = knn_neighbours(m, Vector::Constant(1, 2.0));
    double total = 0;
    for (double w : nb.weights) total += w;
    CHECK(total == doctest::Approx(1.0));
    CHECK(knn_forecast(m, Vector::Constant(1, 2.0), QuantileGrid()).point[0] == doctest::Approx(2.5));
  }
  SUBCASE("k is clamped to the row count") {
    const KnnModel m = fit_knn(testutil::random_matrix(3, 2, 4), testutil::random_matrix(3, 1, 5), KnnOptions{50});
    CHECK(m.k == 3);
  }
}

TEST_CASE("boosted trees") {
  SUBCASE("single stump fits a perfect binary split") {
    Matrix X(40, 1);
    Vector y(40);
    for (int i = 0; i < 40; ++i) {
      X(i, 0) = i < 20 ? 0.0 : 1.0;
      y[i] = i < 20 ? 0.0 : 10.0;
    }
    BoostedTreesOptions o;
    o.trees = 1;
    o.max_leaves = 2;
    o.learning_rate = 1.0;
    o.min_leaf = 1;
    const BoostedTreesModel m = fit_boosted_trees(X, y, o);
    REQUIRE(m.trees.size() == 1);
    for (int i = 0; i < 40; ++i) CHECK(m.predict(X.row(i).transpose()) == doctest::Approx(y[i]).epsilon(1e-12));
  }
  SUBCASE("zero trees predict the training mean") {
    const Matrix X = testutil::random_matrix(50, 2, 3);
    const Vector y = testutil::random_matrix(50, 1, 4).col(0);
    BoostedTreesOptions o;
    o.trees = 0;
    const BoostedTreesModel m = fit_boosted_trees(X, y, o);
    CHECK(m.predict(X.row(0).transpose()) == doctest::Approx(y.mean()));
  }
  SUBCASE("constant target yields no trees") {
    const Matrix X = testutil::random_matrix(50, 2, 3);
    const BoostedTreesModel m = fit_boosted_trees(X, Vector::Constant(50, 4.0), BoostedTreesOptions{});
    CHECK(m.trees.empty());
    CHECK(m.predict(X.row(3).transpose()) == 4.0);
  }
  SUBCASE("daily sine reaches the noise floor and loss never rises") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 0.1);
    const int N = 144 * 14;
    Matrix X(N, 1);
    Vector y(N);
    for (int i = 0; i < N; ++i) {
      X(i, 0) = i % 144;
      y[i] = std::sin(2 * std::numbers::pi * (i % 144) / 144.0) + n(rng);
    }
    BoostedTreesOptions o;
    o.trees = 200;
    const BoostedTreesModel m = fit_boosted_trees(X, y, o);
    double prev = 1e300;
    for (int t = 0; t <= 200; t += 10) {
      double sse = 0;
      for (int i = 0; i < N; ++i) {
        const double r = m.predict(X.row(i).transpose(), t) - y[i];
        sse += r * r;
      }
      CHECK(sse <= prev + 1e-9);
      prev = sse;
    }
    CHECK(std::sqrt(prev / N) < 0.15);
  }
  SUBCASE("prediction is base plus scaled leaves and is seed deterministic") {
    const Matrix X = testutil::random_matrix(300, 4, 6);
    Vector y = X.col(0).array().square() + X.col(1).array();
    BoostedTreesOptions o;
    o.trees = 20;
    o.row_subsample = 0.7;
    o.col_subsample = 0.5;
    o.seed = 42;
    const BoostedTreesModel a = fit_boosted_trees(X, y, o);
    const BoostedTreesModel b = fit_boosted_trees(X, y, o);
    const Vector x = X.row(5).transpose();
    CHECK(a.predict(x) == b.predict(x));
    double manual = a.base;
    for (const auto& t : a.trees) manual += a.learning_rate * t.predict(x);
    CHECK(a.predict(x) == doctest::Approx(manual).epsilon(1e-14));
  }
  SUBCASE("retraining one step ahead leaves the others unchanged") {
    const Matrix X = testutil::random_matrix(200, 3, 12);
    Matrix Y = testutil::random_matrix(200, 3, 13);
    BoostedTreesOptions o;
    o.trees = 10;
    o.row_subsample = 0.8;
    o.seed = 5;
    const FeatureBinner binner = FeatureBinner::fit(X, o.max_bins);
    const BinnedMatrix B = binner.transform(X);
    const auto before = fit_boosted_trees_miso(B, binner, Y, o);
    Y.col(1) = testutil::random_matrix(200, 1, 99).col(0);
    const auto after = fit_boosted_trees_miso(B, binner, Y, o, 2);
    for (Index r = 0; r < 200; r += 7) {
      const Vector x = X.row(r).transpose();
      CHECK(before[0].predict(x) == after[0].predict(x));
      CHECK(before[2].predict(x) == after[2].predict(x));
    }
    CHECK(before[1].predict(X.row(0).transpose()) != after[1].predict(X.row(0).transpose()));
  }
}

TEST_CASE("model documents round trip") {
  const Matrix X = testutil::random_matrix(120, 3, 21);
  const Vector y = X.col(0) * 2 + X.col(2);
  SUBCASE("boosted trees and binner") {
    BoostedTreesOptions o;
    o.trees = 8;
    const BoostedTreesModel m = fit_boosted_trees(X, y, o);
    const BoostedTreesModel back = boosted_trees_from_json(to_json(m));
    for (Index r = 0; r < X.rows(); r += 11) CHECK(back.predict(X.row(r).transpose()) == m.predict(X.row(r).transpose()));
    const FeatureBinner b = FeatureBinner::fit(X, 16);
    CHECK(binner_from_json(to_json(b)).cuts == b.cuts);
    CHECK_THROWS_AS(knn_from_json(to_json(m)), DataError);
  }
  SUBCASE("knn") {
    const KnnModel m = fit_knn(X, X.leftCols(2), KnnOptions{4});
    const KnnModel back = knn_from_json(to_json(m));
    CHECK(back.features == m.features);
    CHECK(back.k == m.k);
  }
  SUBCASE("armax, holt-winters and detrend") {
    const auto series = ar1(400, 0.7, 2);
    std::vector<ArmaxSegment> seg{{series, Matrix(400, 0)}};
    const ArmaxEnsemble e = fit_armax_ensemble(seg, ArmaxOrders{2, 1, 8});
    const ArmaxEnsemble eb = armax_from_json(to_json(e));
    CHECK(eb.members[0].phi == e.members[0].phi);
    CHECK(eb.members[0].theta == e.members[0].theta);

    HwParams p;
    p.config = HwConfig{4, 8, true};
    p.per_step = {HwSmoothing{0.1, 0, 0.2, 0.3}, HwSmoothing{0.4, 0, 0.5, 0.6}};
    p.initial = hw_initial_state_from_history(series, 0, p.config);
    p.detrend = DetrendModel{};
    p.detrend->beta << 1, 2, 3;
    const HwParams pb = hw_params_from_json(to_json(p));
    CHECK(pb.config.literal_s2_decay);
    CHECK(pb.per_step[1].gamma2 == 0.6);
    CHECK(pb.initial->s2 == p.initial->s2);
    CHECK(pb.detrend->beta == p.detrend->beta);
    CHECK(hw_forecast(pb, series, 0) == hw_forecast(p, series, 0));
  }
  CHECK(matrix_from_json(matrix_to_json(X)) == X);
}

TEST_CASE("cross-validated persistence equals direct persistence") {
  const TimeSeriesFrame frame = small_frame(30);
  const ForecastSettings s = light_settings();
  const FoldPlan plan = build_folds(frame.whole_days(), s.embedding, 1, 144);
  const std::string name = frame.names()[0];
  const ForecastResult r = forecast_series_cv(Method::persistence, frame, name, nullptr, plan, s);
  const Vector col = frame.column(name);
  const std::span<const double> series(col.data(), static_cast<std::size_t>(col.size()));
  Index rows = 0;
  for (const auto& f : r.folds) {
    CHECK(f.test_rows == plan.folds[static_cast<std::size_t>(f.fold)].test_rows);
    for (std::size_t k = 0; k < f.test_rows.size(); ++k) {
      const Index t = f.issue_index[k];
      CHECK(t == plan.issue_index(f.test_rows[k]));
      CHECK(f.point.row(static_cast<Index>(k)).transpose() == persistence_forecast(series, t, 144, 144));
      CHECK(f.actual.row(static_cast<Index>(k)).transpose() == col.segment(t + 1, 144));
    }
    rows += static_cast<Index>(f.test_rows.size());
  }
  CHECK(rows == r.test_row_count());
}

TEST_CASE("every method yields the planned rows, monotone fans, and is deterministic") {
  SyntheticSpec spec;
  spec.n_bottom = 2;
  spec.days = 30;
  const SyntheticData data = generate_synthetic(spec);
  const AlignedNwp nwp(data.nwp);
  const TimeSeriesFrame& frame = data.loads;
  ForecastSettings s = light_settings();
  s.embedding.nwp = {"T", "GHI"};
  const FoldPlan plan = build_folds(frame.whole_days(), s.embedding, 1, 144);
  const std::string name = frame.names()[0];
  for (Method m : {Method::holt_winters, Method::armax, Method::knn, Method::boosted_trees}) {
    CAPTURE(to_string(m));
    const ForecastResult a = forecast_series_cv(m, frame, name, &nwp, plan, s);
    const ForecastResult b = forecast_series_cv(m, frame, name, &nwp, plan, s);
    REQUIRE(a.folds.size() == plan.folds.size());
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
      const FoldForecast& fa = a.folds[f];
      CHECK(fa.test_rows == plan.folds[f].test_rows);
      CHECK(fa.point == b.folds[f].point);
      CHECK(fa.residuals == b.folds[f].residuals);
      CHECK(fa.point.allFinite());
      for (const Matrix& q : fa.quantiles) {
        CHECK(q.cols() == 11);
        for (Index h = 0; h < q.rows(); ++h)
          for (Index c = 1; c < q.cols(); ++c) CHECK(q(h, c) >= q(h, c - 1));
      }
    }
  }
  CHECK(method_from_string("boosted_trees") == Method::boosted_trees);
  CHECK_THROWS_AS(method_from_string("prophet"), ConfigError);
}
