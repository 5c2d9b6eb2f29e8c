#include "gridbench/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

double pinball_loss(double q, double y, double alpha) {
  const double e = q - y;
  return e >= 0.0 ? e * (1.0 - alpha) : -e * alpha;
}

double trapezoid_mean(std::span<const double> alphas, std::span<const double> values) {
  if (alphas.empty() || alphas.size() != values.size()) throw DataError("quadrature needs matching non-empty inputs");
  if (alphas.size() == 1) return values[0];
  std::vector<std::size_t> order(alphas.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return alphas[a] < alphas[b]; });
  double integral = 0.0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double w = alphas[order[k]] - alphas[order[k - 1]];
    integral += 0.5 * w * (values[order[k]] + values[order[k - 1]]);
  }
  const double width = alphas[order.back()] - alphas[order.front()];
  if (!(width > 0.0)) throw DataError("quadrature levels must be distinct");
  return integral / width;
}

QuantileScoreAccumulator::QuantileScoreAccumulator(std::vector<double> alphas, int horizon)
    : alphas_(std::move(alphas)), sums_(Matrix::Zero(horizon, static_cast<Index>(alphas_.size()))) {
  if (alphas_.empty() || horizon < 1) throw ConfigError("quantile score needs levels and a horizon");
}

void QuantileScoreAccumulator::add(const Matrix& fan, const Eigen::Ref<const Vector>& actual) {
  if (fan.rows() != sums_.rows() || fan.cols() != sums_.cols() || actual.size() != sums_.rows()) {
    throw DataError(fmt::format("fan {}x{} / actual {} misaligned with {}x{} scores", fan.rows(), fan.cols(),
                                actual.size(), sums_.rows(), sums_.cols()));
  }
  for (Index h = 0; h < fan.rows(); ++h)
    for (Index a = 0; a < fan.cols(); ++a)
      sums_(h, a) += pinball_loss(fan(h, a), actual(h), alphas_[static_cast<std::size_t>(a)]);
  ++samples_;
}

QuantileScoreReport QuantileScoreAccumulator::report() const {
  QuantileScoreReport r;
  r.alphas = alphas_;
  r.samples = samples_;
  const double n = samples_ > 0 ? static_cast<double>(samples_) : std::numeric_limits<double>::quiet_NaN();
  r.loss_by_step = sums_ / n;
  r.mean_loss = r.loss_by_step.colwise().mean().transpose();
  r.score = trapezoid_mean(alphas_, std::span<const double>(r.mean_loss.data(), static_cast<std::size_t>(r.mean_loss.size())));
  r.score_by_step.resize(sums_.rows());
  for (Index h = 0; h < sums_.rows(); ++h) {
    const Vector row = r.loss_by_step.row(h).transpose();
    r.score_by_step(h) = trapezoid_mean(alphas_, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return r;
}

QuantileScoreReport quantile_score(const std::vector<Matrix>& fans, const Matrix& actuals,
                                   const std::vector<double>& alphas) {
  if (static_cast<Index>(fans.size()) != actuals.rows()) throw DataError("fans and actuals misaligned");
  if (fans.empty()) throw DataError("quantile score needs at least one forecast");
  QuantileScoreAccumulator acc(alphas, static_cast<int>(actuals.cols()));
  for (std::size_t i = 0; i < fans.size(); ++i) acc.add(fans[i], actuals.row(static_cast<Index>(i)).transpose());
  return acc.report();
}

Vector normalized_curve(const Vector& scores, const Vector& reference) {
  if (scores.size() != reference.size()) throw DataError("score curves differ in length");
  Vector out(scores.size());
  for (Index i = 0; i < out.size(); ++i) {
    if (reference(i) == 0.0) {
      out(i) = scores(i) == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    } else {
      out(i) = scores(i) / reference(i);
    }
  }
  return out;
}

}  // namespace gridbench
