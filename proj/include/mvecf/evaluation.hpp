#pragma once

#include <vector>

#include "mvecf/market_stats.hpp"
#include "mvecf/wmf.hpp"

namespace mvecf {

// Per-user ordered (item, score) lists, scores non-increasing.
struct RecommendationList {
  std::vector<std::vector<std::pair<int, double>>> per_user;
  int k = 0;
};

// The k highest-scored items outside each user's excluded set; ties broken
// by ascending item index. Throws InsufficientUniverseError when the
// candidate universe is smaller than k for some user.
RecommendationList topk_recommend(const FactorModel& model,
                                  const std::vector<std::vector<int>>& exclude, int k);

// Same selection from an explicit score vector (used by the two-step path).
std::vector<std::pair<int, double>> topk_select(const Eigen::VectorXd& scores,
                                                const std::vector<int>& exclude, int k);

// MAP@k with AP normalizer min(|relevant|, k); users with empty relevant
// sets are excluded from the mean.
double map_at_k(const RecommendationList& recs, const std::vector<std::vector<int>>& relevant,
                int k);
double recall_at_k(const RecommendationList& recs, const std::vector<std::vector<int>>& relevant,
                   int k);

struct UserPortfolioRow {
  int user = 0;
  double mu_init = 0, sigma_init = 0, sr_init = 0;
  double mu_rec = 0, sigma_rec = 0, sr_rec = 0;
  bool zero_risk = false;  // SR undefined; excluded from SR aggregates
};

struct PortfolioReport {
  double delta_mu = 0, delta_sigma = 0, delta_sr = 0, p_sr_improved = 0;
  int zero_risk_excluded = 0;
  std::vector<UserPortfolioRow> rows;
};

// Equal-weight portfolios before (1/h over holdings) and after adding the
// recommendations (1/(h+k) over the union); moment-based mu, sigma, SR per
// user plus the aggregate deltas and improvement fraction.
PortfolioReport portfolio_metrics(const std::vector<std::vector<int>>& holdings,
                                  const RecommendationList& recs, const MarketStats& stats);

// Same construction evaluated on realized returns: per-period portfolio
// returns with fixed weights, SR = mean/std (unbiased), annualized when
// requested. Zero realized variance is flagged and excluded like above.
PortfolioReport expost_metrics(const std::vector<std::vector<int>>& holdings,
                               const RecommendationList& recs, const ReturnsPanel& expost,
                               bool annualize = false);

}  // namespace mvecf
