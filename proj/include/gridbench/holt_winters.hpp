#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gridbench/detrend.hpp"
#include "gridbench/types.hpp"

namespace gridbench {

struct HwSmoothing {
  double alpha = 0.5;
  double beta = 0.0;
  double gamma1 = 0.1;
  double gamma2 = 0.1;
};

struct HwConfig {
  int p1 = 144;   // daily period in steps
  int p2 = 1008;  // weekly period in steps
  /// Decay the weekly seasonal state with (1 - gamma1) instead of
  /// (1 - gamma2).
  bool literal_s2_decay = false;
};

/// Double-seasonal additive Holt-Winters state. Seasonal slots are keyed by
/// absolute time index modulo the period, so s1[t % p1] holds the most recent
/// daily seasonal value at that phase.
struct HwState {
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> s1;
  std::vector<double> s2;
  Index last = -1;  // absolute index of the last absorbed observation
};

/// Absorbs y observed at absolute index state.last + 1.
void hw_update(HwState& state, const HwSmoothing& w, const HwConfig& config, double y);

/// (a_t + h b_t) + s1 + s2 at the phase of t + h.
double hw_point(const HwState& state, const HwConfig& config, int h);

/// Seeds a state from the first p2 samples of `history` (absolute index of
/// history[0] is `first_index`): level = mean of that cycle, s1 = averaged
/// daily profile of the deviations, s2 = what remains. The returned state has
/// absorbed those p2 samples.
HwState hw_initial_state_from_history(std::span<const double> history, Index first_index,
                                      const HwConfig& config);

/// Seeds a state from scattered samples (absolute index, value) such as the
/// training days of a fold. Phases without data keep a zero seasonal value.
HwState hw_initial_state_from_samples(std::span<const Index> indices, std::span<const double> values,
                                      const HwConfig& config);

/// One smoothing set per step ahead plus the optional seed state and detrend.
struct HwParams {
  HwConfig config;
  std::vector<HwSmoothing> per_step;
  std::optional<HwState> initial;
  std::optional<DetrendModel> detrend;

  int horizon() const { return static_cast<int>(per_step.size()); }
};

/// Forecast of steps 1..horizon after the last history sample.
///
/// With a seed state the recursion starts from it and absorbs all of
/// `history`; otherwise the state is seeded from the first p2 samples and the
/// remainder is absorbed. Step j uses per_step[j-1]. `history` must already be
/// detrended when the params carry a detrend model.
Vector hw_forecast(const HwParams& params, std::span<const double> history, Index first_index);

struct HwFitOptions {
  int samples = 200;
  std::uint64_t seed = 0;
  std::vector<double> coarse_grid{0.01, 0.2, 0.4, 0.6, 0.8, 0.99};
  double refine_step = 0.1;
};

/// Fits per-step smoothing weights (beta held at 0) by grid search on the
/// squared j-step error over randomly drawn issue indices. Each sample starts
/// from `seed_state` and absorbs `window` observations ending at the issue
/// index before forecasting.
std::vector<HwSmoothing> fit_holt_winters(std::span<const double> series,
                                          std::span<const Index> issue_indices, int window,
                                          int horizon, const HwState& seed_state,
                                          const HwConfig& config, const HwFitOptions& options);

}  // namespace gridbench
