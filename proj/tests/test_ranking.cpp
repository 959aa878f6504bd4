#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mvecf/errors.hpp"
#include "mvecf/ranking.hpp"
#include "mvecf/synth.hpp"
#include "test_util.hpp"

using namespace mvecf;

namespace {

InteractionMatrix holdings_of(std::vector<std::vector<int>> rows, int n) {
  InteractionMatrix mat;
  mat.m = static_cast<int>(rows.size());
  mat.n = n;
  for (int u = 0; u < mat.m; ++u) mat.user_ids.push_back("u" + std::to_string(u));
  for (int i = 0; i < n; ++i) mat.item_ids.push_back("i" + std::to_string(i));
  mat.rows = std::move(rows);
  return mat;
}

}  // namespace

TEST_CASE("bpr_triple_loss: equal ratings sit at -log(1/2)") {
  FactorModel model;
  model.P = Eigen::MatrixXd::Zero(1, 2);
  model.Q = Eigen::MatrixXd::Zero(2, 2);
  CHECK(bpr_triple_loss(model, {0, 0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("fit_bpr: zero epochs returns the seeded initialization") {
  InteractionMatrix pos = holdings_of({{0}, {1}}, 3);
  RankingConfig cfg;
  cfg.epochs = 0;
  cfg.l = 4;
  FitResult fit = fit_bpr(pos, cfg);
  Hyperparams h;
  h.l = cfg.l;
  h.seed = cfg.seed;
  FactorModel init = init_model(pos.m, pos.n, h);
  CHECK(fit.model.P == init.P);
  CHECK(fit.model.Q == init.Q);
}

TEST_CASE("fit_bpr: separable instance orders the global positive above the negative") {
  // Item 0 is positive for every user, item 1 negative for every user.
  InteractionMatrix pos = holdings_of({{0}, {0}, {0}, {0}}, 2);
  RankingConfig cfg;
  cfg.epochs = 200;
  cfg.alpha = 0.05;
  cfg.l = 4;
  FitResult fit = fit_bpr(pos, cfg);
  for (int u = 0; u < pos.m; ++u) {
    Eigen::VectorXd yhat = fit.model.predict(u);
    CHECK(yhat[0] > yhat[1]);
  }
  CHECK(fit.trace.back().train_loss <= fit.trace.front().train_loss);
}

TEST_CASE("fit_bpr: deterministic given the seed") {
  Rng rng(71);
  InteractionMatrix pos = testutil::random_interactions(6, 12, 1, 6, rng);
  RankingConfig cfg;
  cfg.epochs = 3;
  FitResult a = fit_bpr(pos, cfg);
  FitResult b = fit_bpr(pos, cfg);
  CHECK(a.model.P == b.model.P);
  CHECK(a.model.Q == b.model.Q);
}

TEST_CASE("sample_triple: valid triples, deterministic stream") {
  Rng data_rng(72);
  InteractionMatrix pos = testutil::random_interactions(5, 10, 1, 5, data_rng);
  Rng a(123), b(123);
  for (int s = 0; s < 200; ++s) {
    Triple ta = sample_triple(pos, a);
    Triple tb = sample_triple(pos, b);
    CHECK(ta.u == tb.u);
    CHECK(ta.i == tb.i);
    CHECK(ta.j == tb.j);
    CHECK(pos.holds(ta.u, ta.i));
    CHECK(!pos.holds(ta.u, ta.j));
  }
}

TEST_CASE("sample_triple_nov: beta = 0 never consults the distance") {
  Rng data_rng(73);
  InteractionMatrix pos = testutil::random_interactions(5, 10, 1, 5, data_rng);
  RankingConfig cfg;
  cfg.beta = 0.0;
  int calls = 0;
  DistFn dist = [&calls](int, int) {
    ++calls;
    return 0.0;
  };
  Rng rng(7);
  for (int s = 0; s < 100; ++s) sample_triple_nov(pos, dist, cfg, rng);
  CHECK(calls == 0);
}

TEST_CASE("sample_triple_nov: maximal threshold behaves like plain sampling") {
  Rng data_rng(74);
  InteractionMatrix pos = testutil::random_interactions(5, 10, 1, 5, data_rng);
  auto stats = testutil::random_stats(10, data_rng);
  RankingConfig cfg;
  cfg.beta = 1.0;
  cfg.tau_dist = std::sqrt(2.0);
  DistFn dist = [&stats](int i, int j) { return dissimilarity(stats, i, j); };
  Rng rng(8);
  for (int s = 0; s < 500; ++s) {
    Triple t = sample_triple_nov(pos, dist, cfg, rng);
    CHECK(pos.holds(t.u, t.i));
    CHECK(!pos.holds(t.u, t.j));
  }
}

TEST_CASE("sample_triple_nov: restricted branch honors the threshold") {
  Rng data_rng(75);
  InteractionMatrix pos = testutil::random_interactions(8, 20, 2, 8, data_rng);
  auto stats = testutil::random_stats(20, data_rng);
  RankingConfig cfg;
  cfg.beta = 1.0;
  cfg.tau_dist = 0.9;
  DistFn dist = [&stats](int i, int j) { return dissimilarity(stats, i, j); };
  Rng rng(9);
  for (int s = 0; s < 2000; ++s) {
    Triple t = sample_triple_nov(pos, dist, cfg, rng);
    CHECK(dist(t.i, t.j) < 0.9);
  }
}

TEST_CASE("sample_triple_nov: starvation names the user") {
  // Identity-like covariance: every distinct pair has distance ~1, so no
  // triple can satisfy tau = 0.01.
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(4, 0.1);
  Eigen::MatrixXd sig = Eigen::MatrixXd::Identity(4, 4) * 0.04;
  auto stats = testutil::stats_from(mu, sig);
  InteractionMatrix pos = holdings_of({{0, 1}, {2}}, 4);
  RankingConfig cfg;
  cfg.beta = 1.0;
  cfg.tau_dist = 0.01;
  cfg.sample_retries = 50;
  DistFn dist = [&stats](int i, int j) { return dissimilarity(stats, i, j); };
  Rng rng(10);
  CHECK_THROWS_WITH_AS(sample_triple_nov(pos, dist, cfg, rng), doctest::Contains("u"),
                       DataError);
}

TEST_CASE("fit_bpr: users holding every item are skipped") {
  InteractionMatrix pos = holdings_of({{0, 1, 2}, {0}}, 3);
  RankingConfig cfg;
  cfg.epochs = 1;
  FitResult fit = fit_bpr(pos, cfg);  // must not throw; warns on user u0
  CHECK(fit.model.users() == 2);
}

TEST_CASE("mv_efficient_relabel: conversion fraction and partition") {
  SynthConfig syn;
  syn.n_items = 60;
  syn.m_users = 40;
  syn.T_periods = 60;
  syn.n_sectors = 4;
  syn.K_factors = 4;
  syn.holdings_min = 5;
  syn.holdings_max = 15;
  syn.seed = 99;
  auto panel = gen_returns(syn);
  auto stats = estimate_moments(panel, true);
  auto train = gen_holdings(syn);
  Hyperparams h;
  h.lambda_mv = 10.0;

  RelabeledInteractions out = mv_efficient_relabel(train, stats, h, 0.01);
  const double frac =
      static_cast<double>(out.neg_to_pos) / static_cast<double>(out.original_negatives);
  CHECK(frac >= 0.009);
  CHECK(frac <= 0.011);
  CHECK(out.positives.entry_count() ==
        train.entry_count() + out.neg_to_pos - out.pos_to_neg);

  // Monotonicity: every pair rated above a positively-labeled pair is positive.
  double min_pos = std::numeric_limits<double>::infinity();
  double max_neg = -std::numeric_limits<double>::infinity();
  for (int u = 0; u < train.m; ++u) {
    ModifiedRatingsRow row = mv_ratings(train, stats, h, u);
    for (int i = 0; i < train.n; ++i) {
      const bool positive = out.positives.holds(u, i);
      if (row.y_tilde[i] > out.tau_s) CHECK(positive);
      if (row.y_tilde[i] < out.tau_s) CHECK(!positive);
      if (positive) min_pos = std::min(min_pos, row.y_tilde[i]);
      else max_neg = std::max(max_neg, row.y_tilde[i]);
    }
  }
  CHECK(min_pos >= out.tau_s - 1e-15);
  CHECK(max_neg <= out.tau_s + 1e-15);
}

TEST_CASE("mv_efficient_relabel: lambda_mv = 0 leaves the threshold undefined") {
  Rng rng(76);
  auto stats = testutil::random_stats(10, rng);
  auto train = testutil::random_interactions(5, 10, 1, 6, rng);
  Hyperparams h;
  h.lambda_mv = 0.0;
  CHECK_THROWS_AS(mv_efficient_relabel(train, stats, h, 0.01), NumericalError);
}

TEST_CASE("mv_efficient_relabel: an adversely rated held item flips negative") {
  // User 0 holds items 0 and 1. Item 0 has a low mean and a huge covariance
  // with item 1, so its y_mv is strongly negative and lambda_mv = 100 drags
  // y_tilde below any plausible threshold. Users 1..9 hold item 2 and supply
  // ordinary negatives for the quantile.
  const int n = 4;
  Eigen::VectorXd mu(n);
  mu << -0.30, 0.10, 0.10, 0.12;
  Eigen::MatrixXd sig(n, n);
  sig << 0.09, 0.085, 0.0, 0.0,
         0.085, 0.09, 0.0, 0.0,
         0.0, 0.0, 0.04, 0.01,
         0.0, 0.0, 0.01, 0.04;
  auto stats = testutil::stats_from(mu, sig);
  std::vector<std::vector<int>> rows{{0, 1}};
  for (int u = 0; u < 9; ++u) rows.push_back({2});
  auto train = holdings_of(rows, n);
  Hyperparams h;
  h.lambda_mv = 100.0;
  h.gamma = 3.0;

  RelabeledInteractions out = mv_efficient_relabel(train, stats, h, 0.05);
  // Verified against the Eq.-(7) oracle: y_tilde(u0, i0) is far below tau_s.
  ModifiedRatingsRow row = mv_ratings(train, stats, h, 0);
  CHECK(row.y_tilde[0] < out.tau_s);
  CHECK(!out.positives.holds(0, 0));
  CHECK(out.pos_to_neg >= 1);
}

TEST_CASE("mv_efficient_relabel: conversion fraction bounds") {
  Rng rng(77);
  auto stats = testutil::random_stats(6, rng);
  auto train = testutil::random_interactions(4, 6, 1, 4, rng);
  Hyperparams h;
  CHECK_THROWS_AS(mv_efficient_relabel(train, stats, h, 0.0), ConfigError);
  CHECK_THROWS_AS(mv_efficient_relabel(train, stats, h, 1.0), ConfigError);
}

TEST_CASE("write_relabeled_csv: labels every pair") {
  Rng rng(78);
  auto stats = testutil::random_stats(5, rng);
  auto train = testutil::random_interactions(3, 5, 1, 3, rng);
  Hyperparams h;
  RelabeledInteractions out = mv_efficient_relabel(train, stats, h, 0.1);
  std::ostringstream csv;
  write_relabeled_csv(out, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "user_id,item_id,label");
  int rows = 0, positives = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.back() == '1') ++positives;
  }
  CHECK(rows == train.m * train.n);
  CHECK(positives == static_cast<int>(out.positives.entry_count()));
}
