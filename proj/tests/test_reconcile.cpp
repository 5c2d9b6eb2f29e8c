#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "gridbench/covariance.hpp"
#include "gridbench/hierarchy.hpp"
#include "gridbench/reconcile.hpp"
#include "test_util.hpp"

using namespace gridbench;

namespace {

// Ledoit-Wolf written directly from the per-sample definition.
Matrix ledoit_wolf_oracle(const Matrix& samples, double* delta = nullptr) {
  const Matrix X = samples.rowwise() - samples.colwise().mean();
  const double n = static_cast<double>(X.rows());
  const double p = static_cast<double>(X.cols());
  const Matrix S = X.transpose() * X / n;
  const double mu = S.trace() / p;
  const Matrix I = Matrix::Identity(X.cols(), X.cols());
  const double d2 = (S - mu * I).squaredNorm() / p;
  double b2 = 0.0;
  for (Index k = 0; k < X.rows(); ++k) {
    const Vector x = X.row(k).transpose();
    b2 += (x * x.transpose() - S).squaredNorm() / p;
  }
  b2 = std::min(b2 / (n * n), d2);
  const double d = d2 > 0.0 ? b2 / d2 : 0.0;
  if (delta) *delta = d;
  return d * mu * I + (1.0 - d) * S;
}

Matrix random_spd(Index n, std::uint64_t seed) {
  const Matrix A = testutil::random_matrix(n, n, seed);
  return A * A.transpose() + 0.5 * Matrix::Identity(n, n);
}

Hierarchy tiny() { return build_summation_matrix(2, {}); }

BaseForecastSet single(std::initializer_list<double> values) {
  BaseForecastSet b;
  b.forecasts.resize(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) b.forecasts(0, i++) = v;
  return b;
}

double coherence_gap(const ReconciledForecastSet& r, const Hierarchy& h) {
  return (r.all - r.bottom * h.summation.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("ledoit-wolf matches its closed form") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix X = testutil::random_matrix(6, 3, seed) * (1.0 + seed);
    double delta = 0;
    const Matrix oracle = ledoit_wolf_oracle(X, &delta);
    const CovarianceEstimate est = estimate_ledoit_wolf(X);
    CHECK((est.W - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
    CHECK(est.regularization == doctest::Approx(delta).epsilon(1e-12));
    CHECK(est.W == est.W.transpose());
  }
}

TEST_CASE("ledoit-wolf limits") {
  SUBCASE("sample covariance already proportional to the identity") {
    Matrix X(4, 2);
    X << 1, 1, 1, -1, -1, 1, -1, -1;
    const Matrix S = sample_covariance(X);
    CHECK(S.isApprox(Matrix::Identity(2, 2)));
    CHECK((estimate_ledoit_wolf(X).W - S).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("rank-deficient samples of fifty variables") {
    // Two centred samples are mirror images, so every per-sample outer
    // product equals S and the closed form yields no shrinkage at all.
    const Matrix two = testutil::random_matrix(2, 50, 17);
    double delta = -1;
    const Matrix oracle = ledoit_wolf_oracle(two, &delta);
    const CovarianceEstimate est = estimate_ledoit_wolf(two);
    CHECK(delta < 1e-12);
    CHECK(est.regularization < 1e-12);
    // The rank-one estimate needs the definiteness jitter.
    CHECK(est.jitter > 0.0);
    const Matrix unjittered = est.W - est.jitter * Matrix::Identity(50, 50);
    CHECK((unjittered - oracle).cwiseAbs().maxCoeff() < 1e-12);
    // With a few more samples the identity-covariance case shrinks heavily.
    const Matrix ten_samples = testutil::random_matrix(10, 50, 18);
    double ten_delta = 0;
    ledoit_wolf_oracle(ten_samples, &ten_delta);
    const CovarianceEstimate ten = estimate_ledoit_wolf(ten_samples);
    CHECK(ten.regularization == doctest::Approx(ten_delta).epsilon(1e-12));
    CHECK(ten.regularization > 0.5);
  }
  SUBCASE("many draws of a known diagonal gaussian") {
    const Vector sd = (Vector(4) << 1.0, 2.0, 0.5, 3.0).finished();
    Matrix X = testutil::random_matrix(100000, 4, 23);
    for (Index c = 0; c < 4; ++c) X.col(c) *= sd[c];
    const Matrix W = estimate_ledoit_wolf(X).W;
    for (Index i = 0; i < 4; ++i) {
      CHECK(std::abs(W(i, i) / (sd[i] * sd[i]) - 1.0) < 0.05);
      for (Index j = 0; j < 4; ++j)
        if (i != j) CHECK(std::abs(W(i, j)) < 0.05 * sd[i] * sd[j]);
    }
  }
}

TEST_CASE("graphical lasso") {
  SUBCASE("zero penalty reproduces the sample covariance") {
    const Matrix X = testutil::random_matrix(400, 5, 31) * random_spd(5, 32);
    GraphicalLassoOptions o;
    o.lambda = 0.0;
    o.tolerance = 1e-12;
    o.max_sweeps = 1000;
    const CovarianceEstimate est = estimate_graphical_lasso(X, o);
    const Matrix S = sample_covariance(X);
    CHECK((est.W - S).cwiseAbs().maxCoeff() <= 1e-6 * S.cwiseAbs().maxCoeff());
    REQUIRE(est.precision);
    CHECK((*est.precision * S - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-5);
  }
  SUBCASE("two by two soft threshold") {
    const Matrix X = testutil::random_matrix(200, 2, 41) * random_spd(2, 42);
    const Matrix S = sample_covariance(X);
    for (double lambda : {0.0, 0.25 * std::abs(S(0, 1)), 0.8 * std::abs(S(0, 1)), 2.0 * std::abs(S(0, 1))}) {
      GraphicalLassoOptions o;
      o.lambda = lambda;
      o.tolerance = 1e-12;
      const Matrix W = estimate_graphical_lasso(X, o).W;
      const double s = S(0, 1);
      const double expected = std::copysign(std::max(std::abs(s) - lambda, 0.0), s);
      CHECK(W(0, 1) == doctest::Approx(expected).epsilon(1e-8).scale(S.norm()));
      CHECK(W(0, 0) == doctest::Approx(S(0, 0)).epsilon(1e-10));
      CHECK(W(1, 1) == doctest::Approx(S(1, 1)).epsilon(1e-10));
    }
  }
  SUBCASE("large penalty on independent data zeroes the precision off-diagonal") {
    const Matrix X = testutil::random_matrix(500, 4, 51);
    GraphicalLassoOptions o;
    o.lambda = 10.0;
    const CovarianceEstimate est = estimate_graphical_lasso(X, o);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j)
        if (i != j) CHECK((*est.precision)(i, j) == 0.0);
    CHECK(est.W == est.W.transpose());
  }
  SUBCASE("non-convergence is reported") {
    const Matrix X = testutil::random_matrix(60, 6, 61) * random_spd(6, 62);
    GraphicalLassoOptions o;
    o.lambda = 1e-3;
    o.max_sweeps = 1;
    o.tolerance = 1e-300;
    CHECK_THROWS_AS(estimate_graphical_lasso(X, o), NumericError);
  }
  CHECK(covariance_method_from_string("graphical_lasso") == CovarianceMethod::graphical_lasso);
  CHECK_THROWS_AS(covariance_method_from_string("oas"), ConfigError);
}

TEST_CASE("positive definiteness repair") {
  Matrix W = Matrix::Ones(3, 3);
  const double added = make_positive_definite(W);
  CHECK(added > 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues()(0) > 0.0);
  Matrix I = Matrix::Identity(3, 3);
  CHECK(make_positive_definite(I) == 0.0);
}

TEST_CASE("worked reconciliation examples") {
  const Hierarchy h = tiny();
  const ReconciledForecastSet ols = reconcile_ols(single({10, 3, 4}), h);
  CHECK(ols.bottom(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ols.bottom(0, 1) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(ols.all(0, 0) == doctest::Approx(9.0).epsilon(1e-14));

  const ReconciledForecastSet mint = reconcile_mint(single({10, 3, 4}), h, Matrix::Identity(3, 3));
  CHECK((mint.all - ols.all).cwiseAbs().maxCoeff() < 1e-12);

  Matrix W = Matrix::Identity(3, 3);
  W(0, 0) = 1e6;
  const ReconciledForecastSet distrust = reconcile_mint(single({10, 3, 4}), h, W);
  CHECK(std::abs(distrust.bottom(0, 0) - 3.0) < 1e-5);
  CHECK(std::abs(distrust.bottom(0, 1) - 4.0) < 1e-5);

  const ReconciledForecastSet bayes = reconcile_bayes(single({10, 3, 4}), h, Matrix::Identity(3, 3));
  CHECK(bayes.bottom(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(bayes.bottom(0, 1) == doctest::Approx(5.0).epsilon(1e-12));
  const ReconciledForecastSet vague = reconcile_bayes(single({10, 3, 4}), h, W);
  CHECK(std::abs(vague.bottom(0, 0) - 3.0) < 1e-5);

  const ReconciledForecastSet zero = reconcile_ols(single({0, 0, 0}), h);
  CHECK(zero.all.isZero(0.0));
  CHECK(reconcile_method_from_string("mint") == ReconcileMethod::mint);
}

TEST_CASE("coherence, fixed points and idempotence on the 31-series hierarchy") {
  const std::vector<int> plan{2, 4};
  const Hierarchy h = build_summation_matrix(24, plan);
  const Index n = h.size();
  const Matrix W = estimate_ledoit_wolf(testutil::random_matrix(80, n, 71)).W;
  BaseForecastSet base{testutil::random_matrix(50, n, 72, 10.0)};
  BaseForecastSet coherent{aggregate_bottom(testutil::random_matrix(5, 24, 73, 10.0), h)};
  for (const ReconciliationOperator& op : {ols_operator(h), mint_operator(h, W), bayes_operator(h, W),
                                            bayes_operator(h, W, true)}) {
    CAPTURE(to_string(op.method));
    const ReconciledForecastSet r = apply(op, base);
    CHECK(coherence_gap(r, h) <= 1e-12 * r.all.cwiseAbs().maxCoeff());
    CHECK((op.G * h.summation - Matrix::Identity(24, 24)).cwiseAbs().maxCoeff() < 1e-9);
    const ReconciledForecastSet fixed = apply(op, coherent);
    CHECK((fixed.all - coherent.forecasts).cwiseAbs().maxCoeff() < 1e-9);
    const ReconciledForecastSet twice = apply(op, BaseForecastSet{r.all});
    CHECK((twice.all - r.all).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mint with identity weight equals ols on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<int> plan{2};
    const Hierarchy h = build_summation_matrix(4, plan);
    const BaseForecastSet b{testutil::random_matrix(3, h.size(), 100 + seed, 5.0)};
    const Matrix a = reconcile_mint(b, h, Matrix::Identity(h.size(), h.size())).all;
    CHECK((a - reconcile_ols(b, h).all).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("bayes agrees with mint under block-diagonal covariance") {
  const std::vector<int> plan{2};
  const Hierarchy h = build_summation_matrix(4, plan);
  const Index u = h.n_upper();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix W = Matrix::Zero(h.size(), h.size());
    W.topLeftCorner(u, u) = random_spd(u, 200 + seed);
    W.bottomRightCorner(4, 4) = random_spd(4, 300 + seed);
    const BaseForecastSet b{testutil::random_matrix(4, h.size(), 400 + seed, 3.0)};
    const Matrix bayes = reconcile_bayes(b, h, W).bottom;
    const Matrix mint = reconcile_mint(b, h, W).bottom;
    CHECK((bayes - mint).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("mint beats ols with a known error covariance") {
  const Hierarchy h = tiny();
  Matrix W(3, 3);
  W << 9.0, 0.0, 0.0, 0.0, 1.0, 0.3, 0.0, 0.3, 0.5;
  const Eigen::LLT<Matrix> chol(W);
  const Matrix L = chol.matrixL();
  const Matrix E = testutil::random_matrix(10000, 3, 81) * L.transpose();
  const Matrix truth = Matrix::Zero(10000, 2);
  const BaseForecastSet b{aggregate_bottom(truth, h) + E};
  const Matrix ols = reconcile_ols(b, h).all;
  const Matrix mint = reconcile_mint(b, h, W).all;
  // Paired per-draw difference of squared errors, one-sided z test.
  const Vector diff = ols.rowwise().squaredNorm() - mint.rowwise().squaredNorm();
  const double mean = diff.mean();
  const double sd = std::sqrt((diff.array() - mean).square().sum() / (diff.size() - 1));
  CHECK(mean / (sd / std::sqrt(static_cast<double>(diff.size()))) > 1.645);
}

TEST_CASE("reconciled residuals and fans") {
  const Hierarchy h = tiny();
  const ReconciliationOperator op = ols_operator(h);
  const Matrix e = testutil::random_matrix(30, 3, 91);
  const Matrix re = reconcile_residuals(op, e);
  CHECK((re - e * op.projection().transpose()).cwiseAbs().maxCoeff() < 1e-12);

  ErrorBank zeros(2, 1);
  for (int i = 0; i < 4; ++i) zeros.add_row(0, std::vector<double>{0.0, 0.0});
  zeros.finalize();
  const Vector point = Vector::Constant(2, 3.0);
  const Matrix fan = reconcile_quantiles(zeros, QuantileGrid(), point, 0);
  CHECK((fan.array() == 3.0).all());

  ErrorBank bank(2, 1);
  for (Index r = 0; r < re.rows(); ++r) bank.add_row(0, std::vector<double>{re(r, 0), re(r, 1)});
  bank.finalize();
  const Matrix wide = reconcile_quantiles(bank, QuantileGrid(), point, 0);
  for (Index c = 1; c < wide.cols(); ++c) CHECK((wide.col(c).array() >= wide.col(c - 1).array()).all());
}

TEST_CASE("operator export") {
  testutil::TempDir dir("reconcile_export");
  const Hierarchy h = tiny();
  write_operator_csv(ols_operator(h), {"total", "a", "b"}, dir.path());
  std::ifstream g(dir.path() / "ols_G.csv");
  std::string header;
  std::getline(g, header);
  CHECK(header.find("total") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "ols_projection.csv"));
}
