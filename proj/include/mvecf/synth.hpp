#pragma once

#include <cstdint>
#include <string>

#include "mvecf/holdings.hpp"
#include "mvecf/market_stats.hpp"

namespace mvecf {

// Factor-model market plus sector-concentrated holdings. Stands in for the
// proprietary fund-holdings datasets; defaults keep the full pipeline at
// desk scale.
struct SynthConfig {
  int n_items = 300;
  int m_users = 200;
  int T_periods = 120;
  int K_factors = 8;
  double factor_vol = 0.06;   // per-period stddev of each factor
  double idio_vol = 0.02;     // per-period stddev of idiosyncratic noise
  double mean_level = 0.007;  // per-period expected return, cross-sectional center
  double mean_spread = 0.003; // cross-sectional stddev of expected returns
  int n_sectors = 8;
  int holdings_min = 10;
  int holdings_max = 30;
  double sector_bias = 0.85;  // probability a holding is drawn from the home sector
  std::uint64_t seed = 42;
  int periods_per_year = 12;
  std::string first_period = "2006-01";  // label of period 0 (YYYY-MM)

  void validate() const;
};

// Sector of an item: contiguous blocks of n_items / n_sectors.
int item_sector(const SynthConfig& cfg, int item);

// r_t = a + B f_t + eps_t with per-item means a ~ N(mean_level, mean_spread^2),
// own-sector loadings ~ N(1, 0.2^2), f_t ~ N(0, factor_vol^2 I), and
// eps_t ~ N(0, idio_vol^2 I). Deterministic given cfg.seed.
ReturnsPanel gen_returns(const SynthConfig& cfg);

// Each user gets a home sector and a holding count uniform in
// [holdings_min, holdings_max]; each holding comes from the home sector with
// probability sector_bias, otherwise from the full universe. No duplicates.
InteractionMatrix gen_holdings(const SynthConfig& cfg);

}  // namespace mvecf
