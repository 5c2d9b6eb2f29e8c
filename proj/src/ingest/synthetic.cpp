#include "gridbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <spdlog/fmt/fmt.h>

namespace gridbench {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHeatingBase = 16.0;  // degC
constexpr double kMeanCloudFactor = 0.7;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

double clear_sky(double hour_of_day) {
  const double x = (hour_of_day - 7.0) / 10.0;
  return (x > 0.0 && x < 1.0) ? 550.0 * std::sin(std::numbers::pi * x) : 0.0;
}

double diurnal_temperature(double hour_of_day) {
  return 4.0 + 4.0 * std::cos(kTwoPi * (hour_of_day - 15.0) / 24.0);
}

double hour_of(Timestamp ts, std::int64_t offset) {
  const std::int64_t local = ts + offset;
  return static_cast<double>(((local % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay) / 3600.0;
}

int day_of_week_of(Timestamp ts, std::int64_t offset) {
  const std::int64_t local = ts + offset;
  std::int64_t day = local / kSecondsPerDay;
  if (local % kSecondsPerDay < 0) --day;
  return static_cast<int>(((day + 3) % 7 + 7) % 7);
}

struct NodeShape {
  double level = 0.0;
  double a1 = 0.0, phase1 = 0.0;
  double a2 = 0.0, phase2 = 0.0;
  double weekend = 1.0;
  double heating = 0.0;  // kW per degC below the base
  double pv = 0.0;       // kW per kW/m2 of GHI
  double noise_sd = 0.0;
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_bottom < 1 || spec.days < 1) throw ConfigError("synthetic spec needs n_bottom, days >= 1");
  if (spec.noise < 0.0) throw ConfigError("synthetic noise must be >= 0");

  const std::int64_t step = kDefaultStepSeconds;
  const int spd = static_cast<int>(kSecondsPerDay / step);
  const Index T = static_cast<Index>(spec.days) * spd;
  const std::int64_t offset = std::int64_t{spec.utc_offset_minutes} * 60;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Weather truth, padded by two days on both sides so NWP issuances cover
  // the whole frame.
  const Index pad = 2LL * spd;
  const Index W = T + 2 * pad;
  const Timestamp wstart = spec.start - pad * step;
  Vector temp(W), ghi(W);
  {
    auto rng = stream(spec.seed, 0xC11A7E);
    const double phi_t = 0.997;
    const double phi_c = 0.99;
    double anom = 0.0;
    double cz = 0.0;
    for (Index i = 0; i < W; ++i) {
      anom = phi_t * anom + std::sqrt(1 - phi_t * phi_t) * 3.0 * normal(rng);
      cz = phi_c * cz + std::sqrt(1 - phi_c * phi_c) * normal(rng);
      const double hour = hour_of(wstart + i * step, offset);
      temp(i) = diurnal_temperature(hour) + spec.noise * anom;
      const double cloud = std::clamp(kMeanCloudFactor + 0.25 * spec.noise * cz, 0.05, 1.0);
      ghi(i) = clear_sky(hour) * cloud;
    }
  }

  // Climatological daily means of the weather-driven terms, so those terms
  // are centred and the node levels set the mean load.
  double heat_mean = 0.0;
  double ghi_mean = 0.0;
  for (int s = 0; s < spd; ++s) {
    const double hour = 24.0 * s / spd;
    heat_mean += std::max(0.0, kHeatingBase - diurnal_temperature(hour));
    ghi_mean += clear_sky(hour) * kMeanCloudFactor;
  }
  heat_mean /= spd;
  ghi_mean /= spd;

  auto params_rng = stream(spec.seed, 0x9A9A);
  std::lognormal_distribution<double> level_dist(0.0, 0.5);
  std::vector<NodeShape> nodes(static_cast<std::size_t>(spec.n_bottom));
  for (auto& n : nodes) n.level = level_dist(params_rng);
  const double level_mean =
      std::accumulate(nodes.begin(), nodes.end(), 0.0, [](double s, const NodeShape& n) { return s + n.level; }) /
      static_cast<double>(nodes.size());
  for (auto& n : nodes) {
    n.level *= spec.mean_kw / level_mean;
    n.a1 = 0.15 + 0.2 * uniform(params_rng);
    n.phase1 = kTwoPi * (14.0 + 4.0 * uniform(params_rng)) / 24.0;
    n.a2 = 0.05 + 0.1 * uniform(params_rng);
    n.phase2 = kTwoPi * (8.0 + 4.0 * uniform(params_rng)) / 12.0;
    n.weekend = 0.7 + 0.25 * uniform(params_rng);
    n.heating = n.level * (0.01 + 0.02 * uniform(params_rng));
    n.pv = uniform(params_rng) < 0.3 ? n.level * (0.1 + 0.2 * uniform(params_rng)) : 0.0;
    n.noise_sd = n.level * 0.05;
  }

  Matrix loads(T, spec.n_bottom);
  for (int b = 0; b < spec.n_bottom; ++b) {
    const NodeShape& n = nodes[static_cast<std::size_t>(b)];
    auto rng = stream(spec.seed, 0x1000 + static_cast<std::uint64_t>(b));
    const double phi = 0.95;
    double ar = 0.0;
    const double week_norm = (5.0 + 2.0 * n.weekend) / 7.0;
    for (Index i = 0; i < T; ++i) {
      const Timestamp ts = spec.start + i * step;
      const double hour = hour_of(ts, offset);
      const int dow = day_of_week_of(ts, offset);
      const double daily = 1.0 + n.a1 * std::cos(kTwoPi * hour / 24.0 - n.phase1) +
                           n.a2 * std::cos(kTwoPi * hour / 12.0 - n.phase2);
      const double weekly = (dow >= 5 ? n.weekend : 1.0) / week_norm;
      const double t_now = temp(pad + i);
      const double g_now = ghi(pad + i);
      ar = phi * ar + std::sqrt(1 - phi * phi) * n.noise_sd * normal(rng);
      loads(i, b) = n.level * daily * weekly +
                    n.heating * (std::max(0.0, kHeatingBase - t_now) - heat_mean) -
                    n.pv * (g_now - ghi_mean) / 1000.0 + spec.noise * ar;
    }
  }

  std::vector<std::string> names;
  for (int b = 0; b < spec.n_bottom; ++b) names.push_back(fmt::format("node_{:02d}", b + 1));

  SyntheticData out;
  out.loads = TimeSeriesFrame(spec.start, step, names, std::move(loads), spec.utc_offset_minutes);
  {
    Matrix weather(T, 2);
    weather.col(0) = temp.segment(pad, T);
    weather.col(1) = ghi.segment(pad, T);
    out.weather = TimeSeriesFrame(spec.start, step, {"T", "GHI"}, std::move(weather),
                                  spec.utc_offset_minutes);
  }

  // NWP issuances every 12 h with hourly values over the next 48 h. Errors
  // follow an AR(1) across lead time whose scale grows with the lead.
  NwpTable& nwp = out.nwp;
  nwp.variables = {"T", "GHI", "GNI", "RH", "p", "W_s", "W_dir"};
  const std::int64_t half_day = kSecondsPerDay / 2;
  Timestamp first_issue = wstart;
  first_issue -= ((first_issue % half_day) + half_day) % half_day;
  if (first_issue < wstart) first_issue += half_day;
  const Timestamp wend = wstart + (W - 1) * step;
  auto nwp_rng = stream(spec.seed, 0x4E5750);
  for (Timestamp issue = first_issue; issue <= wend; issue += half_day) {
    double t_err = 0.0;
    double g_err = 0.0;
    for (int lead = 0; lead <= 48; ++lead) {
      const Timestamp valid = issue + lead * 3600LL;
      if (valid > wend) break;
      const Index wi = (valid - wstart) / step;
      const double scale = spec.noise * (0.3 + 1.7 * lead / 48.0);
      t_err = 0.8 * t_err + 0.6 * scale * normal(nwp_rng);
      g_err = 0.8 * g_err + 0.6 * spec.noise * (0.05 + 0.15 * lead / 48.0) * normal(nwp_rng);
      const double t_fc = temp(wi) + t_err;
      const double g_fc = std::max(0.0, ghi(wi) * (1.0 + g_err));
      NwpTable::Record rec;
      rec.issue = issue;
      rec.valid = valid;
      rec.values = {t_fc, g_fc, 1.3 * g_fc, std::clamp(75.0 - 2.0 * t_fc, 20.0, 100.0), 1013.0,
                    3.0 + 0.5 * std::abs(t_err), 220.0};
      nwp.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace gridbench
