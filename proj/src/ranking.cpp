#include "mvecf/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mvecf/errors.hpp"

namespace mvecf {

namespace {

constexpr std::uint64_t kStreamBpr = 0x62707200ULL;  // "bpr"

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<int> eligible_users(const InteractionMatrix& positives, bool warn) {
  std::vector<int> out;
  for (int u = 0; u < positives.m; ++u) {
    const auto h = static_cast<int>(positives.rows[u].size());
    if (h >= 1 && h < positives.n) {
      out.push_back(u);
    } else if (warn && h >= positives.n) {
      std::cerr << "[bpr] warning: user " << positives.user_ids[u]
                << " holds every item; skipped\n";
    }
  }
  if (out.empty()) throw DataError("bpr: no user has both a positive and a negative item");
  return out;
}

int sample_negative(const InteractionMatrix& positives, int u, Rng& rng, int retries) {
  for (int r = 0; r < retries; ++r) {
    const int j = static_cast<int>(rng.uniform_below(positives.n));
    if (!positives.holds(u, j)) return j;
  }
  throw DataError("bpr: could not sample a negative item for user " + positives.user_ids[u]);
}

Triple sample_plain(const InteractionMatrix& positives, const std::vector<int>& users, Rng& rng) {
  Triple t;
  t.u = users[rng.uniform_below(users.size())];
  const auto& pos = positives.rows[t.u];
  t.i = pos[rng.uniform_below(pos.size())];
  t.j = sample_negative(positives, t.u, rng, 100000);
  return t;
}

Triple sample_nov(const InteractionMatrix& positives, const std::vector<int>& users,
                  const DistFn& dist, const RankingConfig& cfg, Rng& rng) {
  if (rng.uniform01() >= cfg.beta) return sample_plain(positives, users, rng);
  int last_user = -1;
  for (int r = 0; r < cfg.sample_retries; ++r) {
    const Triple t = sample_plain(positives, users, rng);
    last_user = t.u;
    if (dist(t.i, t.j) < cfg.tau_dist) return t;
  }
  throw DataError("bpr_nov: no triple with dist < " + std::to_string(cfg.tau_dist) + " after " +
                  std::to_string(cfg.sample_retries) + " retries (last user " +
                  positives.user_ids[last_user] + ")");
}

}  // namespace

void RankingConfig::validate() const {
  if (l < 1) throw ConfigError("ranking: latent dimension l must be >= 1");
  if (alpha <= 0) throw ConfigError("ranking: alpha must be positive");
  if (lambda_reg < 0) throw ConfigError("ranking: lambda_reg must be nonnegative");
  if (tau_dist < 0.0 || tau_dist > std::sqrt(2.0) + 1e-12)
    throw ConfigError("ranking: tau_dist must be in [0, sqrt(2)]");
  if (beta < 0.0 || beta > 1.0) throw ConfigError("ranking: beta must be in [0,1]");
  if (epochs < 0) throw ConfigError("ranking: epochs must be nonnegative");
  if (sample_retries < 1) throw ConfigError("ranking: sample_retries must be positive");
}

Triple sample_triple(const InteractionMatrix& positives, Rng& rng) {
  return sample_plain(positives, eligible_users(positives, false), rng);
}

Triple sample_triple_nov(const InteractionMatrix& positives, const DistFn& dist,
                         const RankingConfig& cfg, Rng& rng) {
  cfg.validate();
  return sample_nov(positives, eligible_users(positives, false), dist, cfg, rng);
}

double bpr_triple_loss(const FactorModel& model, const Triple& t) {
  const double x = model.P.row(t.u).dot(model.Q.row(t.i) - model.Q.row(t.j));
  return -std::log(sigmoid(x));
}

FitResult fit_bpr(const InteractionMatrix& positives, const RankingConfig& cfg,
                  const DistFn* dist) {
  cfg.validate();
  const std::vector<int> users = eligible_users(positives, /*warn=*/true);

  Hyperparams init_hyper;
  init_hyper.l = cfg.l;
  init_hyper.seed = cfg.seed;
  FitResult out;
  out.model = init_model(positives.m, positives.n, init_hyper);

  Rng rng = Rng::stream(cfg.seed, kStreamBpr);
  const std::size_t triples_per_epoch = positives.entry_count();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < triples_per_epoch; ++s) {
      const Triple t = dist ? sample_nov(positives, users, *dist, cfg, rng)
                            : sample_plain(positives, users, rng);
      Eigen::RowVectorXd pu = out.model.P.row(t.u);
      Eigen::RowVectorXd qi = out.model.Q.row(t.i);
      Eigen::RowVectorXd qj = out.model.Q.row(t.j);
      const double x = pu.dot(qi - qj);
      epoch_loss += -std::log(sigmoid(x));
      const double g = sigmoid(-x);  // -d loss / d x
      out.model.P.row(t.u) += cfg.alpha * (g * (qi - qj) - cfg.lambda_reg * pu);
      out.model.Q.row(t.i) += cfg.alpha * (g * pu - cfg.lambda_reg * qi);
      out.model.Q.row(t.j) += cfg.alpha * (-g * pu - cfg.lambda_reg * qj);
    }
    LossRecord rec;
    rec.step = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(triples_per_epoch);
    out.trace.push_back(rec);
    if (!std::isfinite(rec.train_loss))
      throw NumericalError("fit_bpr: diverged at epoch " + std::to_string(epoch));
  }
  return out;
}

RelabeledInteractions mv_efficient_relabel(const InteractionMatrix& train,
                                           const MarketStats& stats, const Hyperparams& hyper,
                                           double conversion_fraction) {
  if (conversion_fraction <= 0.0 || conversion_fraction >= 1.0)
    throw ConfigError("mv_efficient_relabel: conversion_fraction must be in (0,1)");

  // First pass collects the original-negative ratings for the quantile.
  std::vector<double> neg_ratings;
  neg_ratings.reserve(static_cast<std::size_t>(train.m) * train.n - train.entry_count());
  for (int u = 0; u < train.m; ++u) {
    const ModifiedRatingsRow row = mv_ratings(train, stats, hyper, u);
    for (int i = 0; i < train.n; ++i)
      if (!train.holds(u, i)) neg_ratings.push_back(row.y_tilde[i]);
  }
  if (neg_ratings.empty()) throw DataError("mv_efficient_relabel: no negative pairs");

  const auto n_convert = static_cast<std::size_t>(conversion_fraction *
                                                  static_cast<double>(neg_ratings.size()));
  std::sort(neg_ratings.begin(), neg_ratings.end());
  if (neg_ratings.front() == neg_ratings.back())
    throw NumericalError("mv_efficient_relabel: all negative ratings are equal; "
                         "threshold undefined (is lambda_mv zero?)");
  // tau_s = the n_convert-th largest negative rating; the strict '>' rule then
  // converts at most n_convert negatives.
  const double tau_s = neg_ratings[neg_ratings.size() - 1 - n_convert];

  RelabeledInteractions out;
  out.tau_s = tau_s;
  out.original_negatives = neg_ratings.size();
  out.positives.m = train.m;
  out.positives.n = train.n;
  out.positives.user_ids = train.user_ids;
  out.positives.item_ids = train.item_ids;
  out.positives.rows.assign(train.m, {});
  for (int u = 0; u < train.m; ++u) {
    const ModifiedRatingsRow row = mv_ratings(train, stats, hyper, u);
    for (int i = 0; i < train.n; ++i) {
      const bool was_positive = train.holds(u, i);
      bool positive = was_positive;  // ties at tau_s keep the original label
      if (row.y_tilde[i] > tau_s)
        positive = true;
      else if (row.y_tilde[i] < tau_s)
        positive = false;
      if (positive) out.positives.rows[u].push_back(i);
      if (positive && !was_positive) ++out.neg_to_pos;
      if (!positive && was_positive) ++out.pos_to_neg;
    }
  }
  return out;
}

void write_relabeled_csv(const RelabeledInteractions& relabeled, std::ostream& out) {
  const auto& mat = relabeled.positives;
  out << "user_id,item_id,label\n";
  for (int u = 0; u < mat.m; ++u)
    for (int i = 0; i < mat.n; ++i)
      out << mat.user_ids[u] << ',' << mat.item_ids[i] << ',' << (mat.holds(u, i) ? 1 : 0) << '\n';
}

}  // namespace mvecf
