#include <doctest.h>

#include <cmath>
#include <random>

#include "gridbench/kpi.hpp"
#include "gridbench/scores.hpp"
#include "test_util.hpp"

using namespace gridbench;

namespace {

// Fills every cell of a small cube from a seeded generator.
ErrorCube filled_cube(int spd, int horizon, int folds, std::uint64_t seed, double sign = 1.0,
                      double actual_sign = 1.0) {
  ErrorCube cube(spd, horizon, folds);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, 2.0);
  std::uniform_real_distribution<double> y(5.0, 50.0);
  for (int f = 0; f < folds; ++f)
    for (int d = 0; d < spd; ++d)
      for (int h = 1; h <= horizon; ++h)
        for (int k = 0; k < 3; ++k) cube.add(f, d, h, sign * e(rng), actual_sign * y(rng));
  return cube;
}

}  // namespace

TEST_CASE("rmse map") {
  SUBCASE("all errors zero") {
    ErrorCube cube(4, 3, 2);
    for (int f = 0; f < 2; ++f)
      for (int d = 0; d < 4; ++d)
        for (int h = 1; h <= 3; ++h) cube.add(f, d, h, 0.0, 1.0);
    const KpiMatrix m = rmse_map(cube);
    CHECK(m.values.isZero(0.0));
    CHECK(m.present.all());
    CHECK(m.mean() == 0.0);
  }
  SUBCASE("single fold cell") {
    ErrorCube cube(2, 1, 1);
    cube.add(0, 1, 1, 3.0, 10.0);
    cube.add(0, 1, 1, 4.0, 10.0);
    const KpiMatrix m = rmse_map(cube);
    CHECK(m.values(1, 0) == doctest::Approx(std::sqrt(12.5)));
    CHECK_FALSE(m.present(0, 0));
    CHECK(std::isnan(m.values(0, 0)));
    CHECK(m.present_count() == 1);
  }
  SUBCASE("fold mean of per-fold roots") {
    ErrorCube cube(1, 1, 2);
    cube.add(0, 0, 1, 1.0, 10.0);
    cube.add(0, 0, 1, -1.0, 10.0);
    cube.add(1, 0, 1, 3.0, 10.0);
    const KpiMatrix m = rmse_map(cube);
    CHECK(m.values(0, 0) == doctest::Approx(2.0));
    CHECK(m.fold_counts(0, 0) == 2);
  }
  SUBCASE("cells empty in some folds average the populated folds") {
    ErrorCube cube(1, 1, 3);
    cube.add(0, 0, 1, 2.0, 10.0);
    cube.add(2, 0, 1, 4.0, 10.0);
    const KpiMatrix m = rmse_map(cube);
    CHECK(m.values(0, 0) == doctest::Approx(3.0));
    CHECK(m.fold_counts(0, 0) == 2);
  }
}

TEST_CASE("mape map") {
  SUBCASE("worked example") {
    ErrorCube cube(1, 1, 1);
    cube.add(0, 0, 1, 1.0, 10.0);
    cube.add(0, 0, 1, -1.0, 10.0);
    CHECK(mape_map(cube).values(0, 0) == doctest::Approx(10.0));
  }
  SUBCASE("zero errors") {
    ErrorCube cube(1, 1, 1);
    cube.add(0, 0, 1, 0.0, 3.0);
    CHECK(mape_map(cube).values(0, 0) == 0.0);
  }
  SUBCASE("small actuals are excluded and tallied") {
    ErrorCube cube(1, 1, 1, 0.1);
    cube.add(0, 0, 1, 1.0, 10.0);
    cube.add(0, 0, 1, 1.0, 0.05);
    cube.add(0, 0, 1, 1.0, -0.09);
    CHECK(cube.mape_exclusions() == 2);
    CHECK(cube.ape_count(0, 0, 1) == 1);
    CHECK(mape_map(cube).values(0, 0) == doctest::Approx(10.0));
    CHECK(rmse_map(cube).values(0, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("sign symmetries") {
  const KpiMatrix a = rmse_map(filled_cube(3, 4, 2, 9));
  const KpiMatrix b = rmse_map(filled_cube(3, 4, 2, 9, -1.0));
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
  // Flipping the actuals while the forecasts stay put changes the errors,
  // so MAPE moves; flipping forecasts and actuals together leaves it unchanged.
  const KpiMatrix m = mape_map(filled_cube(3, 4, 2, 9));
  const KpiMatrix both = mape_map(filled_cube(3, 4, 2, 9, -1.0, -1.0));
  CHECK((m.values - both.values).cwiseAbs().maxCoeff() < 1e-12);
  const double forecast = 11.0, actual = 10.0;
  ErrorCube kept(1, 1, 1);
  kept.add(0, 0, 1, forecast - actual, actual);
  ErrorCube flipped(1, 1, 1);
  flipped.add(0, 0, 1, forecast - (-actual), -actual);
  CHECK(mape_map(kept).values(0, 0) == doctest::Approx(10.0));
  CHECK(mape_map(flipped).values(0, 0) == doctest::Approx(210.0));
}

TEST_CASE("normalization against a reference") {
  const KpiMatrix p = rmse_map(filled_cube(3, 4, 2, 1));
  const KpiMatrix self = normalize(p, p);
  CHECK(self.normalized);
  CHECK((self.values.array() == 1.0).all());
  CHECK(no_improvement_mask(self).all());

  const KpiMatrix better = rmse_map(filled_cube(3, 4, 2, 2));
  const KpiMatrix ratio = normalize(better, p);
  for (Index d = 0; d < 3; ++d)
    for (Index h = 0; h < 4; ++h) CHECK(ratio.values(d, h) == doctest::Approx(better.values(d, h) / p.values(d, h)));
  CHECK((no_improvement_mask(ratio) == (ratio.values.array() >= 1.0)).all());

  ErrorCube zero(1, 1, 1);
  zero.add(0, 0, 1, 0.0, 1.0);
  ErrorCube one(1, 1, 1);
  one.add(0, 0, 1, 1.0, 1.0);
  CHECK(normalize(rmse_map(zero), rmse_map(zero)).values(0, 0) == 1.0);
  CHECK_FALSE(normalize(rmse_map(one), rmse_map(zero)).present(0, 0));
}

TEST_CASE("profiles and aggregation") {
  KpiMatrix c;
  c.values = Matrix::Constant(5, 4, 2.5);
  c.present = Mask::Constant(5, 4, true);
  CHECK((horizon_profile(c).array() == 2.5).all());
  CHECK(c.mean() == 2.5);

  KpiMatrix holes = c;
  holes.values(0, 1) = std::nan("");
  holes.present(0, 1) = false;
  holes.values(1, 1) = 10.0;
  const Vector prof = horizon_profile(holes);
  CHECK(prof[1] == doctest::Approx((10.0 + 3 * 2.5) / 4));

  const Vector a = (Vector(2) << 1.0, std::nan("")).finished();
  const Vector b = (Vector(2) << 3.0, 4.0).finished();
  const Vector avg = average_profile({a, b});
  CHECK(avg[0] == 2.0);
  CHECK(avg[1] == 4.0);
  CHECK(average_of_means({c, c}) == 2.5);
}

TEST_CASE("binned and relative reductions") {
  const Vector base = testutil::random_matrix(144, 1, 3).col(0).cwiseAbs().array() + 1.0;
  const Vector rec = base.array() * 0.9;
  const Vector bins = binned_reduction(base, rec, 24);
  REQUIRE(bins.size() == 6);
  for (Index b = 0; b < 6; ++b) {
    double sb = 0, sr = 0;
    for (Index i = 24 * b; i < 24 * (b + 1); ++i) {
      sb += base[i];
      sr += rec[i];
    }
    CHECK(bins[b] == doctest::Approx(1.0 - sr / sb));
    CHECK(bins[b] == doctest::Approx(0.1));
  }
  CHECK(binned_reduction(base, base, 24).isZero(0.0));
  const Vector ragged = binned_reduction(base.head(50), rec.head(50), 24);
  CHECK(ragged.size() == 3);
  const Vector rel = relative_reduction(base, rec);
  CHECK((rel.array() - 0.1).abs().maxCoeff() < 1e-12);
  const Vector worse = relative_reduction(base, base * 1.2);
  CHECK((worse.array() < 0.0).all());
}

TEST_CASE("pinball loss") {
  CHECK(pinball_loss(3.0, 3.0, 0.3) == 0.0);
  CHECK(pinball_loss(1.0, 0.0, 0.9) == doctest::Approx(0.1));
  CHECK(pinball_loss(-1.0, 0.0, 0.9) == doctest::Approx(0.9));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 200; ++i) {
    const double q = n(rng), y = n(rng);
    for (double a : {0.05, 0.5, 0.95}) {
      const double l = pinball_loss(q, y, a);
      CHECK(l >= 0.0);
      CHECK((l == 0.0) == (q == y));
    }
  }
}

TEST_CASE("quantile score") {
  const std::vector<double> alphas{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  SUBCASE("degenerate fan at the truth") {
    Matrix actual(2, 3);
    actual << 1, 2, 3, 4, 5, 6;
    std::vector<Matrix> fans;
    for (Index r = 0; r < 2; ++r) fans.push_back(actual.row(r).transpose().replicate(1, 11));
    const QuantileScoreReport rep = quantile_score(fans, actual, alphas);
    CHECK(rep.score == 0.0);
    CHECK(rep.samples == 2);
  }
  SUBCASE("single level") {
    Matrix actual(1, 1);
    actual << 0.0;
    const QuantileScoreReport rep = quantile_score({Matrix::Constant(1, 1, 1.0)}, actual, {0.9});
    CHECK(rep.score == doctest::Approx(0.1));
  }
  SUBCASE("trapezoid rule and reversal invariance") {
    const std::vector<double> v{1, 3, 2, 5, 4, 6, 2, 1, 3, 0, 2};
    double manual = 0;
    for (std::size_t i = 1; i < alphas.size(); ++i) manual += 0.5 * (v[i] + v[i - 1]) * (alphas[i] - alphas[i - 1]);
    manual /= (alphas.back() - alphas.front());
    CHECK(trapezoid_mean(alphas, v) == doctest::Approx(manual));
    const std::vector<double> ra(alphas.rbegin(), alphas.rend()), rv(v.rbegin(), v.rend());
    CHECK(trapezoid_mean(ra, rv) == doctest::Approx(manual).epsilon(1e-14));
  }
  SUBCASE("score equals the quadrature of the mean losses") {
    const Matrix actual = testutil::random_matrix(20, 4, 5);
    std::vector<Matrix> fans;
    for (Index r = 0; r < 20; ++r) {
      Matrix f(4, 11);
      for (Index c = 0; c < 11; ++c) f.col(c).setConstant(-1.5 + 0.3 * static_cast<double>(c));
      fans.push_back(f);
    }
    const QuantileScoreReport rep = quantile_score(fans, actual, alphas);
    std::vector<double> ml(rep.mean_loss.data(), rep.mean_loss.data() + rep.mean_loss.size());
    CHECK(rep.score == doctest::Approx(trapezoid_mean(alphas, ml)));
    CHECK((rep.mean_loss.array() >= 0.0).all());
    CHECK(rep.score_by_step.size() == 4);
    CHECK(rep.score_by_step.mean() == doctest::Approx(rep.score));
  }
  SUBCASE("normalized curves") {
    const Vector s = (Vector(3) << 1.0, 0.0, 2.0).finished();
    const Vector r = (Vector(3) << 2.0, 0.0, 2.0).finished();
    const Vector n = normalized_curve(s, r);
    CHECK(n[0] == 0.5);
    CHECK(n[1] == 1.0);
    CHECK(n[2] == 1.0);
  }
}
