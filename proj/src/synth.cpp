#include "mvecf/synth.hpp"

#include <algorithm>
#include <set>

#include "mvecf/errors.hpp"
#include "mvecf/rng.hpp"

namespace mvecf {

namespace {

constexpr std::uint64_t kStreamReturns = 0x72657473ULL;   // "rets"
constexpr std::uint64_t kStreamHoldings = 0x686f6c64ULL;  // "hold"

std::string advance_month(const std::string& start, int offset) {
  int year = std::stoi(start.substr(0, 4));
  int month = std::stoi(start.substr(5, 2));
  int total = year * 12 + (month - 1) + offset;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", total / 12, total % 12 + 1);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_items < 1 || m_users < 1 || T_periods < 1 || K_factors < 1 || n_sectors < 1)
    throw ConfigError("synth: counts must be positive");
  if (factor_vol < 0 || idio_vol < 0 || mean_spread < 0)
    throw ConfigError("synth: volatilities must be nonnegative");
  if (sector_bias < 0.0 || sector_bias > 1.0) throw ConfigError("synth: sector_bias must be in [0,1]");
  if (holdings_min < 1 || holdings_min > holdings_max)
    throw ConfigError("synth: holdings range must satisfy 1 <= min <= max");
  if (periods_per_year < 1) throw ConfigError("synth: periods_per_year must be positive");
  if (first_period.size() != 7 || first_period[4] != '-')
    throw ConfigError("synth: first_period must be YYYY-MM");
}

int item_sector(const SynthConfig& cfg, int item) {
  return static_cast<int>(static_cast<long long>(item) * cfg.n_sectors / cfg.n_items);
}

ReturnsPanel gen_returns(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, kStreamReturns);

  Eigen::VectorXd a(cfg.n_items);
  for (int i = 0; i < cfg.n_items; ++i) a[i] = rng.normal(cfg.mean_level, cfg.mean_spread);
  // Sector-block loadings: dominant weight on the home-sector factor plus a
  // small exposure to every other factor, so items carry a market-wide
  // component the way listed equities do.
  Eigen::MatrixXd loadings(cfg.n_items, cfg.K_factors);
  for (int i = 0; i < cfg.n_items; ++i) {
    const int home = item_sector(cfg, i) % cfg.K_factors;
    for (int k = 0; k < cfg.K_factors; ++k)
      loadings(i, k) = k == home ? rng.normal(1.0, 0.5) : rng.normal(0.25, 0.1);
  }

  ReturnsPanel panel;
  panel.periods_per_year = cfg.periods_per_year;
  panel.returns.resize(cfg.T_periods, cfg.n_items);
  char buf[16];
  for (int t = 0; t < cfg.T_periods; ++t) {
    if (cfg.periods_per_year == 12) {
      panel.period_labels.push_back(advance_month(cfg.first_period, t));
    } else {
      std::snprintf(buf, sizeof(buf), "%d", t + 1);
      panel.period_labels.push_back(buf);
    }
    Eigen::VectorXd f(cfg.K_factors);
    for (int k = 0; k < cfg.K_factors; ++k) f[k] = rng.normal(0.0, cfg.factor_vol);
    for (int i = 0; i < cfg.n_items; ++i)
      panel.returns(t, i) = a[i] + loadings.row(i).dot(f) + rng.normal(0.0, cfg.idio_vol);
  }
  for (int i = 0; i < cfg.n_items; ++i) {
    std::snprintf(buf, sizeof(buf), "S%04d", i);
    panel.item_ids.push_back(buf);
  }
  validate_panel(panel);
  return panel;
}

InteractionMatrix gen_holdings(const SynthConfig& cfg) {
  cfg.validate();
  if (cfg.holdings_max > cfg.n_items) throw ConfigError("synth: holdings_max exceeds n_items");
  Rng rng = Rng::stream(cfg.seed, kStreamHoldings);

  // Precompute sector membership lists.
  std::vector<std::vector<int>> sector_items(cfg.n_sectors);
  for (int i = 0; i < cfg.n_items; ++i) sector_items[item_sector(cfg, i)].push_back(i);

  InteractionMatrix mat;
  mat.m = cfg.m_users;
  mat.n = cfg.n_items;
  char buf[16];
  for (int i = 0; i < cfg.n_items; ++i) {
    std::snprintf(buf, sizeof(buf), "S%04d", i);
    mat.item_ids.push_back(buf);
  }
  for (int u = 0; u < cfg.m_users; ++u) {
    std::snprintf(buf, sizeof(buf), "U%04d", u);
    mat.user_ids.push_back(buf);

    const int home = cfg.n_sectors == 1 ? 0 : rng.uniform_int(0, cfg.n_sectors - 1);
    const int count = rng.uniform_int(cfg.holdings_min, cfg.holdings_max);
    std::set<int> held;
    while (static_cast<int>(held.size()) < count) {
      const bool biased = rng.uniform01() < cfg.sector_bias;
      std::vector<int> pool;
      if (biased) {
        for (int i : sector_items[home])
          if (!held.count(i)) pool.push_back(i);
      }
      if (pool.empty()) {  // unbiased draw, or home sector exhausted
        for (int i = 0; i < cfg.n_items; ++i)
          if (!held.count(i)) pool.push_back(i);
      }
      held.insert(pool[rng.uniform_below(pool.size())]);
    }
    mat.rows.emplace_back(held.begin(), held.end());
  }
  return mat;
}

}  // namespace mvecf
