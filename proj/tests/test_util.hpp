#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "mvecf/holdings.hpp"
#include "mvecf/market_stats.hpp"
#include "mvecf/rng.hpp"

namespace testutil {

using mvecf::InteractionMatrix;
using mvecf::MarketStats;
using mvecf::Rng;

inline MarketStats stats_from(Eigen::VectorXd mu, Eigen::MatrixXd sigma, double loading = 0.0) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < mu.size(); ++i) ids.push_back("I" + std::to_string(i));
  return mvecf::make_market_stats(std::move(mu), std::move(sigma), std::move(ids), loading);
}

// Random strictly positive-definite stats on a plausible annualized scale.
inline MarketStats random_stats(int n, Rng& rng, double scale = 0.2) {
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = rng.normal(0.0, scale / std::sqrt(n));
  Eigen::MatrixXd sigma = B * B.transpose();
  sigma.diagonal().array() += 0.01 * scale * scale;
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();
  Eigen::VectorXd mu(n);
  for (int i = 0; i < n; ++i) mu[i] = rng.normal(0.08, 0.05);
  return stats_from(std::move(mu), std::move(sigma));
}

// Random holdings where every user holds in [min_h, max_h] items.
inline InteractionMatrix random_interactions(int m, int n, int min_h, int max_h, Rng& rng) {
  InteractionMatrix mat;
  mat.m = m;
  mat.n = n;
  for (int u = 0; u < m; ++u) mat.user_ids.push_back("u" + std::to_string(u));
  for (int i = 0; i < n; ++i) mat.item_ids.push_back("i" + std::to_string(i));
  mat.rows.resize(m);
  for (int u = 0; u < m; ++u) {
    const int count = rng.uniform_int(min_h, std::min(max_h, n));
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    mat.rows[u].assign(all.begin(), all.begin() + count);
    std::sort(mat.rows[u].begin(), mat.rows[u].end());
  }
  return mat;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = a.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double mean = (n - 1) / 2.0;
  double num = 0, da = 0, db = 0;
  for (std::size_t k = 0; k < n; ++k) {
    num += (ra[k] - mean) * (rb[k] - mean);
    da += (ra[k] - mean) * (ra[k] - mean);
    db += (rb[k] - mean) * (rb[k] - mean);
  }
  return num / std::sqrt(da * db);
}

}  // namespace testutil
