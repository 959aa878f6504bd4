#include "mvecf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mvecf/errors.hpp"
#include "mvecf/parallel.hpp"

namespace mvecf {

std::vector<std::pair<int, double>> topk_select(const Eigen::VectorXd& scores,
                                                const std::vector<int>& exclude, int k) {
  const int n = static_cast<int>(scores.size());
  std::set<int> excluded(exclude.begin(), exclude.end());
  std::vector<int> candidates;
  candidates.reserve(n);
  for (int i = 0; i < n; ++i)
    if (!excluded.count(i)) candidates.push_back(i);
  if (k > static_cast<int>(candidates.size()))
    throw InsufficientUniverseError("topk: need k <= " + std::to_string(candidates.size()) +
                                    " candidates, got k = " + std::to_string(k));
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<std::pair<int, double>> out;
  out.reserve(k);
  for (int r = 0; r < k; ++r) out.emplace_back(candidates[r], scores[candidates[r]]);
  return out;
}

RecommendationList topk_recommend(const FactorModel& model,
                                  const std::vector<std::vector<int>>& exclude, int k) {
  if (static_cast<int>(exclude.size()) != model.users())
    throw ConfigError("topk_recommend: exclusion list size does not match user count");
  if (k < 0) throw ConfigError("topk_recommend: k must be nonnegative");
  RecommendationList recs;
  recs.k = k;
  recs.per_user.resize(model.users());
  parallel_for(0, model.users(), [&](int u) {
    recs.per_user[u] = topk_select(model.predict(u), exclude[u], k);
  });
  return recs;
}

double map_at_k(const RecommendationList& recs, const std::vector<std::vector<int>>& relevant,
                int k) {
  double sum = 0.0;
  int counted = 0;
  for (std::size_t u = 0; u < recs.per_user.size(); ++u) {
    const std::set<int> rel(relevant[u].begin(), relevant[u].end());
    if (rel.empty()) continue;
    ++counted;
    double ap = 0.0;
    int hits = 0;
    const int depth = std::min<int>(k, static_cast<int>(recs.per_user[u].size()));
    for (int r = 0; r < depth; ++r) {
      if (rel.count(recs.per_user[u][r].first)) {
        ++hits;
        ap += static_cast<double>(hits) / (r + 1);
      }
    }
    sum += ap / std::min<std::size_t>(rel.size(), k);
  }
  return counted > 0 ? sum / counted : 0.0;
}

double recall_at_k(const RecommendationList& recs, const std::vector<std::vector<int>>& relevant,
                   int k) {
  double sum = 0.0;
  int counted = 0;
  for (std::size_t u = 0; u < recs.per_user.size(); ++u) {
    const std::set<int> rel(relevant[u].begin(), relevant[u].end());
    if (rel.empty()) continue;
    ++counted;
    int hits = 0;
    const int depth = std::min<int>(k, static_cast<int>(recs.per_user[u].size()));
    for (int r = 0; r < depth; ++r)
      if (rel.count(recs.per_user[u][r].first)) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rel.size());
  }
  return counted > 0 ? sum / counted : 0.0;
}

namespace {

PortfolioReport aggregate(std::vector<UserPortfolioRow> rows) {
  PortfolioReport report;
  int sr_counted = 0;
  for (const auto& row : rows) {
    report.delta_mu += row.mu_rec - row.mu_init;
    report.delta_sigma += row.sigma_rec - row.sigma_init;
    if (row.zero_risk) {
      ++report.zero_risk_excluded;
      continue;
    }
    report.delta_sr += row.sr_rec - row.sr_init;
    if (row.sr_rec > row.sr_init) report.p_sr_improved += 1.0;
    ++sr_counted;
  }
  const auto m = static_cast<double>(rows.size());
  if (m > 0) {
    report.delta_mu /= m;
    report.delta_sigma /= m;
  }
  if (sr_counted > 0) {
    report.delta_sr /= sr_counted;
    report.p_sr_improved /= sr_counted;
  }
  report.rows = std::move(rows);
  return report;
}

}  // namespace

PortfolioReport portfolio_metrics(const std::vector<std::vector<int>>& holdings,
                                  const RecommendationList& recs, const MarketStats& stats) {
  const auto m = holdings.size();
  if (recs.per_user.size() != m)
    throw ConfigError("portfolio_metrics: holdings and recommendations disagree on user count");
  std::vector<UserPortfolioRow> rows(m);
  parallel_for(0, static_cast<int>(m), [&](int u) {
    if (holdings[u].empty()) throw DataError("portfolio_metrics: user has no holdings");
    UserPortfolioRow row;
    row.user = u;
    std::vector<int> combined = holdings[u];
    for (const auto& [item, score] : recs.per_user[u]) {
      if (std::binary_search(holdings[u].begin(), holdings[u].end(), item))
        throw DataError("portfolio_metrics: recommended item already held");
      combined.push_back(item);
    }
    Eigen::VectorXd w_init = Eigen::VectorXd::Zero(stats.n_items());
    for (int i : holdings[u]) w_init[i] = 1.0 / holdings[u].size();
    Eigen::VectorXd w_rec = Eigen::VectorXd::Zero(stats.n_items());
    for (int i : combined) w_rec[i] = 1.0 / combined.size();

    row.mu_init = stats.mu.dot(w_init);
    row.mu_rec = stats.mu.dot(w_rec);
    const double var_init = w_init.dot(stats.sigma * w_init);
    const double var_rec = w_rec.dot(stats.sigma * w_rec);
    row.sigma_init = std::sqrt(std::max(0.0, var_init));
    row.sigma_rec = std::sqrt(std::max(0.0, var_rec));
    if (var_init <= 0.0 || var_rec <= 0.0) {
      row.zero_risk = true;
    } else {
      row.sr_init = row.mu_init / row.sigma_init;
      row.sr_rec = row.mu_rec / row.sigma_rec;
    }
    rows[u] = row;
  });
  return aggregate(std::move(rows));
}

PortfolioReport expost_metrics(const std::vector<std::vector<int>>& holdings,
                               const RecommendationList& recs, const ReturnsPanel& expost,
                               bool annualize) {
  const auto m = holdings.size();
  if (recs.per_user.size() != m)
    throw ConfigError("expost_metrics: holdings and recommendations disagree on user count");
  if (expost.periods() < 2)
    throw DataError("expost_metrics: ex-post panel needs at least 2 periods");
  validate_panel(expost);

  const double mean_scale = annualize ? expost.periods_per_year : 1.0;
  const double std_scale = annualize ? std::sqrt(static_cast<double>(expost.periods_per_year)) : 1.0;
  const auto T = expost.periods();

  std::vector<UserPortfolioRow> rows(m);
  parallel_for(0, static_cast<int>(m), [&](int u) {
    if (holdings[u].empty()) throw DataError("expost_metrics: user has no holdings");
    UserPortfolioRow row;
    row.user = u;
    auto realized = [&](const std::vector<int>& items) {
      Eigen::VectorXd series = Eigen::VectorXd::Zero(T);
      for (int i : items) series += expost.returns.col(i);
      series /= static_cast<double>(items.size());
      const double mean = series.mean();
      const double var = (series.array() - mean).square().sum() / static_cast<double>(T - 1);
      return std::make_pair(mean * mean_scale, std::sqrt(std::max(0.0, var)) * std_scale);
    };
    std::vector<int> combined = holdings[u];
    for (const auto& [item, score] : recs.per_user[u]) combined.push_back(item);

    const auto [mu_i, sd_i] = realized(holdings[u]);
    const auto [mu_r, sd_r] = realized(combined);
    row.mu_init = mu_i;
    row.sigma_init = sd_i;
    row.mu_rec = mu_r;
    row.sigma_rec = sd_r;
    if (sd_i <= 0.0 || sd_r <= 0.0) {
      row.zero_risk = true;
    } else {
      row.sr_init = mu_i / sd_i;
      row.sr_rec = mu_r / sd_r;
    }
    rows[u] = row;
  });
  return aggregate(std::move(rows));
}

}  // namespace mvecf
