#include "gridbench/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

std::string_view to_string(CovarianceMethod method) {
  switch (method) {
    case CovarianceMethod::sample: return "sample";
    case CovarianceMethod::ledoit_wolf: return "ledoit_wolf";
    case CovarianceMethod::graphical_lasso: return "graphical_lasso";
  }
  return "unknown";
}

CovarianceMethod covariance_method_from_string(std::string_view name) {
  for (auto m : {CovarianceMethod::sample, CovarianceMethod::ledoit_wolf, CovarianceMethod::graphical_lasso}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError(fmt::format("unknown covariance estimator '{}'", name));
}

namespace {

Matrix centred(const Matrix& samples) {
  if (samples.rows() < 2) throw DataError(fmt::format("covariance needs >= 2 samples, got {}", samples.rows()));
  if (!samples.allFinite()) throw DataError("covariance samples contain non-finite values");
  return samples.rowwise() - samples.colwise().mean();
}

void symmetrize(Matrix& W) { W = (0.5 * (W + W.transpose())).eval(); }

double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

}  // namespace

Matrix sample_covariance(const Matrix& samples) {
  const Matrix X = centred(samples);
  Matrix S = X.transpose() * X / static_cast<double>(X.rows());
  symmetrize(S);
  return S;
}

double make_positive_definite(Matrix& W) {
  symmetrize(W);
  const Index n = W.rows();
  auto min_eigen = [](const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0); };
  if (n == 0 || min_eigen(W) > 0.0) return 0.0;
  const double base = std::max(std::abs(W.trace()) / static_cast<double>(n), 1e-300);
  double added = 0.0;
  for (double scale = 1e-8; scale < 1e8; scale *= 10.0) {
    const double step = scale * base - added;
    W.diagonal().array() += step;
    added += step;
    if (min_eigen(W) > 0.0) return added;
  }
  throw NumericError("covariance could not be made positive definite");
}

CovarianceEstimate estimate_ledoit_wolf(const Matrix& samples) {
  const Matrix X = centred(samples);
  const auto n = static_cast<double>(X.rows());
  const auto p = static_cast<double>(X.cols());
  Matrix S = X.transpose() * X / n;
  symmetrize(S);
  const double mu = S.trace() / p;

  const Matrix X2 = X.array().square().matrix();
  const double beta_sum = (X2.transpose() * X2).sum() / n - S.squaredNorm();
  const double beta = std::max(0.0, beta_sum / (p * n));
  const double delta = (S.squaredNorm() - 2.0 * mu * S.trace() + p * mu * mu) / p;
  const double shrinkage = (beta == 0.0 || delta == 0.0) ? 0.0 : std::min(beta, delta) / delta;

  CovarianceEstimate est;
  est.method = CovarianceMethod::ledoit_wolf;
  est.regularization = shrinkage;
  est.W = (1.0 - shrinkage) * S;
  est.W.diagonal().array() += shrinkage * mu;
  est.jitter = make_positive_definite(est.W);
  return est;
}

CovarianceEstimate estimate_graphical_lasso(const Matrix& samples, const GraphicalLassoOptions& options) {
  const Matrix S = sample_covariance(samples);
  const Index p = S.rows();
  double off_mean = 0.0;
  if (p > 1) off_mean = (S.cwiseAbs().sum() - S.diagonal().cwiseAbs().sum()) / static_cast<double>(p * (p - 1));
  const double lambda = options.lambda < 0.0 ? 0.01 * off_mean : options.lambda;

  CovarianceEstimate est;
  est.method = CovarianceMethod::graphical_lasso;
  est.regularization = lambda;
  Matrix W = S;
  Matrix B = Matrix::Zero(std::max<Index>(p - 1, 0), p);  // column j holds beta_j
  const double scale = std::max(S.diagonal().cwiseAbs().mean(), 1e-300);

  auto others = [p](Index j) {
    std::vector<Index> idx;
    for (Index i = 0; i < p; ++i)
      if (i != j) idx.push_back(i);
    return idx;
  };

  auto precision_of = [&](const Matrix& Wc) {
    Matrix theta = Matrix::Zero(p, p);
    if (p == 1) {
      theta(0, 0) = 1.0 / Wc(0, 0);
      return theta;
    }
    for (Index j = 0; j < p; ++j) {
      const auto idx = others(j);
      const Vector beta = B.col(j);
      const Vector w12 = Wc(idx, j);
      const double t22 = 1.0 / (Wc(j, j) - w12.dot(beta));
      theta(j, j) = t22;
      for (std::size_t k = 0; k < idx.size(); ++k) theta(idx[k], j) = -beta(static_cast<Index>(k)) * t22;
    }
    symmetrize(theta);
    return theta;
  };
  auto duality_gap = [&](const Matrix& theta) {
    const double off = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
    return (S.cwiseProduct(theta)).sum() - static_cast<double>(p) + lambda * off;
  };

  bool converged = p <= 1;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    const Matrix W_old = W;
    for (Index j = 0; j < p; ++j) {
      const auto idx = others(j);
      const Matrix W11 = W(idx, idx);
      const Vector s12 = S(idx, j);
      Vector beta = B.col(j);
      for (int it = 0; it < options.max_inner; ++it) {
        double max_change = 0.0;
        for (Index k = 0; k < beta.size(); ++k) {
          const double r = s12(k) - W11.row(k).dot(beta) + W11(k, k) * beta(k);
          const double updated = soft_threshold(r, lambda) / W11(k, k);
          max_change = std::max(max_change, std::abs(updated - beta(k)) * W11(k, k));
          beta(k) = updated;
        }
        if (max_change < options.tolerance * scale) break;
      }
      B.col(j) = beta;
      const Vector w12 = W11 * beta;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        W(idx[k], j) = w12(static_cast<Index>(k));
        W(j, idx[k]) = w12(static_cast<Index>(k));
      }
    }
    const double change = (W - W_old).cwiseAbs().mean();
    converged = change < options.tolerance * scale;
  }
  if (!converged) {
    const double gap = duality_gap(precision_of(W));
    throw NumericError(fmt::format("graphical lasso did not converge in {} sweeps (duality gap {:.3e})",
                                   options.max_sweeps, gap));
  }
  symmetrize(W);
  est.precision = precision_of(W);
  est.W = W;
  est.jitter = make_positive_definite(est.W);
  return est;
}

CovarianceEstimate estimate_covariance(const Matrix& samples, CovarianceMethod method,
                                       const GraphicalLassoOptions& glasso) {
  switch (method) {
    case CovarianceMethod::ledoit_wolf: return estimate_ledoit_wolf(samples);
    case CovarianceMethod::graphical_lasso: return estimate_graphical_lasso(samples, glasso);
    case CovarianceMethod::sample: break;
  }
  CovarianceEstimate est;
  est.W = sample_covariance(samples);
  est.jitter = make_positive_definite(est.W);
  return est;
}

}  // namespace gridbench
