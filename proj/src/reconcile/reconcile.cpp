#include "gridbench/reconcile.hpp"

#include <fstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

namespace gridbench {

std::string_view to_string(ReconcileMethod method) {
  switch (method) {
    case ReconcileMethod::ols: return "ols";
    case ReconcileMethod::mint: return "mint";
    case ReconcileMethod::bayes: return "bayes";
  }
  return "unknown";
}

ReconcileMethod reconcile_method_from_string(std::string_view name) {
  for (auto m : {ReconcileMethod::ols, ReconcileMethod::mint, ReconcileMethod::bayes}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError(fmt::format("unknown reconciliation method '{}'", name));
}

namespace {

constexpr double kConditionLimit = 1e12;

void check_square(const Hierarchy& h, const Matrix& W) {
  if (W.rows() != h.size() || W.cols() != h.size()) {
    throw DataError(fmt::format("covariance is {}x{} but the hierarchy has {} series", W.rows(), W.cols(), h.size()));
  }
  if (!W.allFinite()) throw DataError("covariance contains non-finite values");
}

/// Solves M X = B for symmetric positive definite M, jittering M when its
/// condition number is excessive.
Matrix spd_solve(Matrix M, const Matrix& B, const char* what) {
  M = (0.5 * (M + M.transpose())).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(eig.eigenvalues().size() - 1);
  if (!(lo > 0.0) || hi / lo > kConditionLimit) {
    const double jitter = 1e-8 * std::max(std::abs(M.trace()) / static_cast<double>(M.rows()), 1e-300);
    spdlog::warn("{} is ill-conditioned (eigenvalues {:.3e}..{:.3e}), solving with jitter {:.3e}", what, lo, hi, jitter);
    M.diagonal().array() += jitter;
  }
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw NumericError(fmt::format("{} factorization failed", what));
  return ldlt.solve(B);
}

}  // namespace

ReconciliationOperator ols_operator(const Hierarchy& hierarchy) {
  ReconciliationOperator op;
  op.method = ReconcileMethod::ols;
  op.S = hierarchy.summation;
  op.G = spd_solve(op.S.transpose() * op.S, op.S.transpose(), "S'S");
  return op;
}

ReconciliationOperator mint_operator(const Hierarchy& hierarchy, const Matrix& W) {
  check_square(hierarchy, W);
  ReconciliationOperator op;
  op.method = ReconcileMethod::mint;
  op.S = hierarchy.summation;
  const Matrix Wsym = 0.5 * (W + W.transpose());
  Eigen::LLT<Matrix> llt(Wsym);
  if (llt.info() != Eigen::Success) throw NumericError("minT covariance is not positive definite");
  const Matrix WinvS = llt.solve(op.S);
  op.G = spd_solve(op.S.transpose() * WinvS, WinvS.transpose(), "S'W^-1S");
  return op;
}

ReconciliationOperator bayes_operator(const Hierarchy& hierarchy, const Matrix& W, bool use_cross_covariance) {
  check_square(hierarchy, W);
  const Index nu = hierarchy.n_upper();
  const Index nb = hierarchy.n_bottom;
  const Matrix A = hierarchy.upper();
  const Matrix sigma_u = W.topLeftCorner(nu, nu);
  const Matrix sigma_b = W.bottomRightCorner(nb, nb);
  Matrix cross = Matrix::Zero(nb, nu);  // Cov(bottom errors, upper errors)
  if (use_cross_covariance) cross = 0.5 * (W.bottomLeftCorner(nb, nu) + W.topRightCorner(nu, nb).transpose());

  // Innovation v = y_u - A y_b has covariance A Sb A' + Su - A C - C' A'.
  const Matrix innovation = A * sigma_b * A.transpose() + sigma_u - A * cross - cross.transpose() * A.transpose();
  const Matrix gain_rhs = sigma_b * A.transpose() - cross;  // nb x nu
  const Matrix K = spd_solve(innovation, gain_rhs.transpose(), "innovation covariance").transpose();

  ReconciliationOperator op;
  op.method = ReconcileMethod::bayes;
  op.S = hierarchy.summation;
  op.G.resize(nb, nu + nb);
  op.G.leftCols(nu) = K;
  op.G.rightCols(nb) = Matrix::Identity(nb, nb) - K * A;
  Matrix post = sigma_b - K * innovation * K.transpose();
  op.posterior_covariance = 0.5 * (post + post.transpose());
  return op;
}

ReconciledForecastSet apply(const ReconciliationOperator& op, const BaseForecastSet& base) {
  if (base.forecasts.cols() != op.G.cols()) {
    throw DataError(fmt::format("base forecasts have {} columns, expected {}", base.forecasts.cols(), op.G.cols()));
  }
  ReconciledForecastSet out;
  out.bottom = base.forecasts * op.G.transpose();
  out.all = out.bottom * op.S.transpose();
  return out;
}

ReconciledForecastSet reconcile_ols(const BaseForecastSet& base, const Hierarchy& hierarchy) {
  return apply(ols_operator(hierarchy), base);
}

ReconciledForecastSet reconcile_mint(const BaseForecastSet& base, const Hierarchy& hierarchy, const Matrix& W) {
  return apply(mint_operator(hierarchy, W), base);
}

ReconciledForecastSet reconcile_bayes(const BaseForecastSet& base, const Hierarchy& hierarchy, const Matrix& W,
                                      bool use_cross_covariance) {
  return apply(bayes_operator(hierarchy, W, use_cross_covariance), base);
}

Matrix reconcile_residuals(const ReconciliationOperator& op, const Matrix& residuals) {
  if (residuals.cols() != op.G.cols()) throw DataError("residual width does not match the hierarchy");
  return residuals * op.projection().transpose();
}

Matrix reconcile_quantiles(const ErrorBank& reconciled_bank, const QuantileGrid& grid,
                           const Vector& reconciled_point, int step_of_day) {
  return empirical_quantiles(reconciled_bank, grid, reconciled_point, step_of_day);
}

void write_operator_csv(const ReconciliationOperator& op, const std::vector<std::string>& names,
                        const std::filesystem::path& directory) {
  if (static_cast<Index>(names.size()) != op.G.cols()) throw DataError("series names do not match the operator");
  std::filesystem::create_directories(directory);
  auto write = [&](const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out << "series";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
      out << rows[static_cast<std::size_t>(r)];
      for (Index c = 0; c < m.cols(); ++c) out << ',' << fmt::format("{:.17g}", m(r, c));
      out << '\n';
    }
  };
  const std::vector<std::string> bottom(names.end() - static_cast<std::ptrdiff_t>(op.G.rows()), names.end());
  const std::string tag(to_string(op.method));
  write(directory / (tag + "_G.csv"), op.G, bottom);
  write(directory / (tag + "_projection.csv"), op.projection(), names);
}

}  // namespace gridbench
