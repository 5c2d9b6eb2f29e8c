#include "gridbench/holt_winters.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <tuple>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

namespace {

std::size_t phase(Index t, int p) {
  const Index m = t % p;
  return static_cast<std::size_t>(m < 0 ? m + p : m);
}

void check_config(const HwConfig& c) {
  if (c.p1 < 1 || c.p2 < 1 || c.p2 % c.p1 != 0) {
    throw ConfigError(fmt::format("Holt-Winters periods ({}, {}) must be positive with p1 | p2", c.p1, c.p2));
  }
}

}  // namespace

void hw_update(HwState& state, const HwSmoothing& w, const HwConfig& config, double y) {
  const Index t = state.last + 1;
  const std::size_t k1 = phase(t, config.p1);
  const std::size_t k2 = phase(t, config.p2);
  const double s1_old = state.s1[k1];
  const double s2_old = state.s2[k2];
  const double level = w.alpha * (y - s1_old - s2_old) + (1.0 - w.alpha) * (state.level + state.trend);
  const double trend = w.beta * (level - state.level) + (1.0 - w.beta) * state.trend;
  const double s2_decay = config.literal_s2_decay ? (1.0 - w.gamma1) : (1.0 - w.gamma2);
  state.s1[k1] = w.gamma1 * (y - level - s2_old) + (1.0 - w.gamma1) * s1_old;
  state.s2[k2] = w.gamma2 * (y - level - s1_old) + s2_decay * s2_old;
  state.level = level;
  state.trend = trend;
  state.last = t;
}

double hw_point(const HwState& state, const HwConfig& config, int h) {
  const Index target = state.last + h;
  return state.level + h * state.trend + state.s1[phase(target, config.p1)] +
         state.s2[phase(target, config.p2)];
}

HwState hw_initial_state_from_history(std::span<const double> history, Index first_index,
                                      const HwConfig& config) {
  check_config(config);
  if (static_cast<Index>(history.size()) < config.p2) {
    throw DataError(fmt::format("Holt-Winters needs {} steps of history, got {}", config.p2, history.size()));
  }
  std::vector<Index> idx(static_cast<std::size_t>(config.p2));
  for (Index i = 0; i < config.p2; ++i) idx[static_cast<std::size_t>(i)] = first_index + i;
  HwState s = hw_initial_state_from_samples(idx, history.first(static_cast<std::size_t>(config.p2)), config);
  s.last = first_index + config.p2 - 1;
  return s;
}

HwState hw_initial_state_from_samples(std::span<const Index> indices, std::span<const double> values,
                                      const HwConfig& config) {
  check_config(config);
  if (indices.empty() || indices.size() != values.size()) throw DataError("Holt-Winters seed needs samples");
  HwState s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.level = sum / static_cast<double>(values.size());
  s.s1.assign(static_cast<std::size_t>(config.p1), 0.0);
  s.s2.assign(static_cast<std::size_t>(config.p2), 0.0);

  std::vector<double> acc1(static_cast<std::size_t>(config.p1), 0.0);
  std::vector<int> n1(static_cast<std::size_t>(config.p1), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t k = phase(indices[i], config.p1);
    acc1[k] += values[i] - s.level;
    ++n1[k];
  }
  for (std::size_t k = 0; k < acc1.size(); ++k)
    if (n1[k] > 0) s.s1[k] = acc1[k] / n1[k];

  std::vector<double> acc2(static_cast<std::size_t>(config.p2), 0.0);
  std::vector<int> n2(static_cast<std::size_t>(config.p2), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t k = phase(indices[i], config.p2);
    acc2[k] += values[i] - s.level - s.s1[phase(indices[i], config.p1)];
    ++n2[k];
  }
  for (std::size_t k = 0; k < acc2.size(); ++k)
    if (n2[k] > 0) s.s2[k] = acc2[k] / n2[k];

  s.last = *std::max_element(indices.begin(), indices.end());
  return s;
}

Vector hw_forecast(const HwParams& params, std::span<const double> history, Index first_index) {
  check_config(params.config);
  const int H = params.horizon();
  if (H < 1) throw ConfigError("Holt-Winters params carry no step-ahead sets");
  HwState seed;
  std::span<const double> rest = history;
  if (params.initial) {
    seed = *params.initial;
    seed.last = first_index - 1;
  } else {
    seed = hw_initial_state_from_history(history, first_index, params.config);
    rest = history.subspan(static_cast<std::size_t>(params.config.p2));
  }
  // Steps sharing a smoothing set share one pass over the history.
  Vector out(H);
  std::vector<bool> done(static_cast<std::size_t>(H), false);
  for (int j = 1; j <= H; ++j) {
    if (done[static_cast<std::size_t>(j - 1)]) continue;
    const HwSmoothing& w = params.per_step[static_cast<std::size_t>(j - 1)];
    HwState s = seed;
    for (double y : rest) hw_update(s, w, params.config, y);
    for (int k = j; k <= H; ++k) {
      const HwSmoothing& v = params.per_step[static_cast<std::size_t>(k - 1)];
      if (v.alpha == w.alpha && v.beta == w.beta && v.gamma1 == w.gamma1 && v.gamma2 == w.gamma2) {
        out(k - 1) = hw_point(s, params.config, k);
        done[static_cast<std::size_t>(k - 1)] = true;
      }
    }
  }
  return out;
}

std::vector<HwSmoothing> fit_holt_winters(std::span<const double> series,
                                          std::span<const Index> issue_indices, int window,
                                          int horizon, const HwState& seed_state,
                                          const HwConfig& config, const HwFitOptions& options) {
  check_config(config);
  if (issue_indices.empty()) throw DataError("Holt-Winters fit needs training issue times");
  if (window < 1 || horizon < 1) throw ConfigError("Holt-Winters window and horizon must be positive");

  // Random subset of issue indices.
  std::vector<Index> samples(issue_indices.begin(), issue_indices.end());
  std::mt19937_64 rng(options.seed);
  std::shuffle(samples.begin(), samples.end(), rng);
  if (static_cast<int>(samples.size()) > options.samples) samples.resize(static_cast<std::size_t>(options.samples));
  std::sort(samples.begin(), samples.end());
  for (Index t : samples) {
    if (t - window + 1 < 0 || t + horizon >= static_cast<Index>(series.size())) {
      throw DataError("Holt-Winters fit sample outside the series");
    }
  }

  // Sum of squared errors for every step ahead under one smoothing set.
  auto evaluate = [&](const HwSmoothing& w, std::vector<double>& sse) {
    std::fill(sse.begin(), sse.end(), 0.0);
    for (Index t : samples) {
      HwState s = seed_state;
      s.last = t - window;
      for (Index i = t - window + 1; i <= t; ++i) hw_update(s, w, config, series[static_cast<std::size_t>(i)]);
      for (int j = 1; j <= horizon; ++j) {
        const double e = hw_point(s, config, j) - series[static_cast<std::size_t>(t + j)];
        sse[static_cast<std::size_t>(j - 1)] += e * e;
      }
    }
  };

  std::vector<HwSmoothing> best(static_cast<std::size_t>(horizon));
  std::vector<double> best_sse(static_cast<std::size_t>(horizon), std::numeric_limits<double>::infinity());
  std::vector<double> sse(static_cast<std::size_t>(horizon));
  for (double a : options.coarse_grid) {
    for (double g1 : options.coarse_grid) {
      for (double g2 : options.coarse_grid) {
        const HwSmoothing w{a, 0.0, g1, g2};
        evaluate(w, sse);
        for (std::size_t j = 0; j < sse.size(); ++j) {
          if (sse[j] < best_sse[j]) {
            best_sse[j] = sse[j];
            best[j] = w;
          }
        }
      }
    }
  }

  // One refinement pass around each step's coarse optimum. Candidates are
  // pooled across steps so each smoothing set is simulated once.
  const double lo_bound = options.coarse_grid.front();
  const double hi_bound = options.coarse_grid.back();
  auto around = [&](double c) {
    std::vector<double> v;
    for (double d : {-options.refine_step, 0.0, options.refine_step}) {
      const double x = std::clamp(c + d, lo_bound, hi_bound);
      if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    }
    return v;
  };
  using Key = std::tuple<double, double, double>;
  auto neighbourhood = [&](const HwSmoothing& c) {
    std::vector<Key> keys;
    for (double a : around(c.alpha))
      for (double g1 : around(c.gamma1))
        for (double g2 : around(c.gamma2)) keys.emplace_back(a, g1, g2);
    return keys;
  };
  std::map<Key, std::vector<double>> refined;
  for (const auto& c : best)
    for (const Key& k : neighbourhood(c)) refined.try_emplace(k);
  for (auto& [k, values] : refined) {
    values.resize(static_cast<std::size_t>(horizon));
    evaluate(HwSmoothing{std::get<0>(k), 0.0, std::get<1>(k), std::get<2>(k)}, values);
  }
  for (std::size_t j = 0; j < best.size(); ++j) {
    for (const Key& k : neighbourhood(best[j])) {
      const double v = refined.at(k)[j];
      if (v < best_sse[j]) {
        best_sse[j] = v;
        best[j] = HwSmoothing{std::get<0>(k), 0.0, std::get<1>(k), std::get<2>(k)};
      }
    }
  }
  return best;
}

}  // namespace gridbench
