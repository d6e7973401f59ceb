#pragma once

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "ylab/rng.hpp"
#include "ylab/timeseries.hpp"

namespace ylab {

// Desk-scale synthetic stand-in for a market dataset: a mean-reverting target
// driven by one lagged column, plus independent Gaussian decoys, plus level
// regimes that push the target through distinct value ranges.
struct SynthConfig {
  std::size_t length = 500;
  std::size_t decoys = 5;
  std::size_t driver_lag = 5;
  double driver_coef = 0.8;
  std::size_t regimes = 1;      // number of constant-level segments
  double regime_shift = 2.0;    // level offset applied to every second segment
  double mean_reversion = 0.9;  // AR(1) coefficient of the target around its level
  double noise_std = 0.1;
  std::uint64_t seed = 42;
};

namespace detail {

inline std::string iso_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace detail

inline TimeSeriesTable synth_generate(const SynthConfig& cfg, Rng& rng) {
  if (cfg.length == 0) {
    throw std::invalid_argument("synth_generate: length must be positive");
  }
  const std::size_t n = cfg.length;

  Vector driver(n);
  for (auto& v : driver) v = rng.gaussian();

  std::vector<Vector> decoys(cfg.decoys, Vector(n));
  for (auto& col : decoys) {
    for (auto& v : col) v = rng.gaussian();
  }

  // Level regimes: equal-length segments, alternating between 0 and the shift.
  const std::size_t segments = std::max<std::size_t>(cfg.regimes, 1);
  const std::size_t seg_len = (n + segments - 1) / segments;

  Vector target(n);
  double ar = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double drive =
        (t >= cfg.driver_lag) ? cfg.driver_coef * driver[t - cfg.driver_lag] : 0.0;
    ar = cfg.mean_reversion * ar + drive + cfg.noise_std * rng.gaussian();
    const std::size_t seg = t / seg_len;
    const double level = (seg % 2 == 1) ? cfg.regime_shift : 0.0;
    target[t] = level + ar;
  }

  TimeSeriesTable t;
  t.target_name = "target";
  t.column_names.push_back("target");
  t.columns.push_back(std::move(target));
  t.column_names.push_back("driver");
  t.columns.push_back(std::move(driver));
  for (std::size_t d = 0; d < cfg.decoys; ++d) {
    char name[24];
    std::snprintf(name, sizeof name, "decoy%02zu", d + 1);
    t.column_names.emplace_back(name);
    t.columns.push_back(std::move(decoys[d]));
  }

  using namespace std::chrono;
  sys_days day = sys_days(year{2000} / January / 3);
  t.timestamps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.timestamps.push_back(detail::iso_date(day));
    day += days(1);
  }
  return t;
}

inline TimeSeriesTable synth_generate(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  return synth_generate(cfg, rng);
}

}  // namespace ylab
