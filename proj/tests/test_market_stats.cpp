#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mvecf/errors.hpp"
#include "mvecf/market_stats.hpp"
#include "test_util.hpp"

using namespace mvecf;

namespace {

ReturnsPanel make_panel(const Eigen::MatrixXd& returns, int ppy = 12) {
  ReturnsPanel p;
  p.returns = returns;
  p.periods_per_year = ppy;
  for (Eigen::Index t = 0; t < returns.rows(); ++t)
    p.period_labels.push_back(std::to_string(t + 1));
  for (Eigen::Index i = 0; i < returns.cols(); ++i) p.item_ids.push_back("I" + std::to_string(i));
  return p;
}

// Independent covariance oracle: explicit double loop over entries.
Eigen::MatrixXd brute_force_cov(const Eigen::MatrixXd& r) {
  const auto T = r.rows(), n = r.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < n; ++i) mean[i] += r(t, i) / T;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        cov(i, j) += (r(t, i) - mean[i]) * (r(t, j) - mean[j]) / (T - 1);
  return cov;
}

}  // namespace

TEST_CASE("estimate_moments: zero-variance panel keeps only the loading") {
  Eigen::MatrixXd r(12, 2);
  for (int t = 0; t < 12; ++t) {
    r(t, 0) = 0.01;
    r(t, 1) = 0.02;
  }
  MarketStats s = estimate_moments(make_panel(r), false, 1e-4);
  CHECK(s.mu[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(s.mu[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(s.sigma(0, 0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.sigma(1, 1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.sigma(0, 1) == 0.0);
}

TEST_CASE("estimate_moments: hand-computed unbiased variance") {
  Eigen::MatrixXd r(3, 1);
  r << 0.0, 0.1, 0.2;
  MarketStats s = estimate_moments(make_panel(r), false, 0.0);
  CHECK(s.mu[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(s.sigma(0, 0) == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("estimate_moments: T < 2 is moment-undefined") {
  Eigen::MatrixXd r(1, 2);
  r << 0.01, 0.02;
  CHECK_THROWS_AS(estimate_moments(make_panel(r)), DataError);
}

TEST_CASE("estimate_moments: non-finite input rejected") {
  Eigen::MatrixXd r(3, 1);
  r << 0.0, std::nan(""), 0.1;
  CHECK_THROWS_AS(estimate_moments(make_panel(r)), DataError);
}

TEST_CASE("estimate_moments: returns at or below -1 rejected") {
  Eigen::MatrixXd r(2, 1);
  r << -1.0, 0.1;
  CHECK_THROWS_AS(estimate_moments(make_panel(r)), DataError);
}

TEST_CASE("estimate_moments: annualization scales both moments") {
  Rng rng(11);
  Eigen::MatrixXd r(30, 3);
  for (int t = 0; t < 30; ++t)
    for (int i = 0; i < 3; ++i) r(t, i) = rng.normal(0.01, 0.05);
  MarketStats plain = estimate_moments(make_panel(r), false, 0.0);
  MarketStats annual = estimate_moments(make_panel(r), true, 0.0);
  CHECK((annual.mu - 12.0 * plain.mu).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((annual.sigma - 12.0 * plain.sigma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("estimate_moments: covariance matches the brute-force oracle") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const int T = rng.uniform_int(4, 40);
    const int n = rng.uniform_int(1, 8);
    Eigen::MatrixXd r(T, n);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i) r(t, i) = rng.normal(0.01, 0.08);
    MarketStats s = estimate_moments(make_panel(r), false, 0.0);
    Eigen::MatrixXd oracle = brute_force_cov(r);
    const double scale = std::max(1.0, oracle.cwiseAbs().maxCoeff());
    CHECK((s.sigma - oracle).cwiseAbs().maxCoeff() / scale < 1e-12);
  }
}

TEST_CASE("estimate_moments: permutation equivariance") {
  Rng rng(6);
  const int T = 20, n = 5;
  Eigen::MatrixXd r(T, n);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) r(t, i) = rng.normal(0.0, 0.05);
  std::vector<int> perm{3, 0, 4, 1, 2};
  Eigen::MatrixXd rp(T, n);
  for (int i = 0; i < n; ++i) rp.col(i) = r.col(perm[i]);
  MarketStats a = estimate_moments(make_panel(r), false, 0.0);
  MarketStats b = estimate_moments(make_panel(rp), false, 0.0);
  for (int i = 0; i < n; ++i) {
    CHECK(b.mu[i] == doctest::Approx(a.mu[perm[i]]).epsilon(1e-14));
    for (int j = 0; j < n; ++j)
      CHECK(b.sigma(i, j) == doctest::Approx(a.sigma(perm[i], perm[j])).epsilon(1e-12));
  }
}

TEST_CASE("sharpe_ratio: scalar case and scale invariance") {
  MarketStats s = testutil::stats_from(Eigen::VectorXd::Constant(1, 0.1),
                                       Eigen::MatrixXd::Constant(1, 1, 0.04));
  Eigen::VectorXd w1 = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd w2 = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(sharpe_ratio(w1, s) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sharpe_ratio(w2, s) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sharpe_ratio: hand-evaluated quadratic form") {
  Eigen::VectorXd mu(2);
  mu << 0.1, 0.2;
  Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 2);
  sig(0, 0) = 0.04;
  sig(1, 1) = 0.09;
  MarketStats s = testutil::stats_from(mu, sig);
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  const double expected = 0.15 / std::sqrt(0.0325);
  CHECK(sharpe_ratio(w, s) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(sharpe_ratio(w, s) == doctest::Approx(0.83205029).epsilon(1e-7));
}

TEST_CASE("sharpe_ratio: positive scaling leaves the ratio unchanged") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rng.uniform_int(2, 10);
    MarketStats s = testutil::random_stats(n, rng);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform01() + 0.01;
    const double alpha = rng.uniform01() * 10 + 0.01;
    const double a = sharpe_ratio(w, s);
    const double b = sharpe_ratio((alpha * w).eval(), s);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("sharpe_ratio: zero-risk portfolio raises") {
  MarketStats s = testutil::stats_from(Eigen::VectorXd::Constant(1, 0.1),
                                       Eigen::MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(sharpe_ratio(Eigen::VectorXd::Ones(1), s), NumericalError);
}

TEST_CASE("sharpe_ratio: invalid weights rejected") {
  MarketStats s = testutil::stats_from(Eigen::VectorXd::Constant(1, 0.1),
                                       Eigen::MatrixXd::Constant(1, 1, 0.04));
  CHECK_THROWS_AS(sharpe_ratio(Eigen::VectorXd::Zero(1), s), ConfigError);
  CHECK_THROWS_AS(sharpe_ratio(Eigen::VectorXd::Constant(1, -1.0), s), ConfigError);
}

TEST_CASE("dissimilarity: pinned values") {
  Eigen::VectorXd mu(2);
  mu << 0.1, 0.1;

  SUBCASE("self-correlation gives zero") {
    Eigen::MatrixXd sig(2, 2);
    sig << 0.04, 0.01, 0.01, 0.09;
    MarketStats s = testutil::stats_from(mu, sig);
    CHECK(dissimilarity(s, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("zero covariance gives one") {
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 2);
    sig(0, 0) = 0.04;
    sig(1, 1) = 0.09;
    MarketStats s = testutil::stats_from(mu, sig);
    CHECK(dissimilarity(s, 0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("perfect anticorrelation gives sqrt(2)") {
    Eigen::MatrixXd sig(2, 2);
    sig << 0.04, -0.06, -0.06, 0.09;  // rho = -1, PSD (determinant 0)
    MarketStats s = testutil::stats_from(mu, sig);
    CHECK(dissimilarity(s, 0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("zero-variance item is undefined") {
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 2);
    sig(1, 1) = 0.09;
    MarketStats s = testutil::stats_from(mu, sig);
    CHECK_THROWS_AS(dissimilarity(s, 0, 1), NumericalError);
  }
}

TEST_CASE("dissimilarity: symmetric with zero diagonal on random stats") {
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rng.uniform_int(2, 12);
    MarketStats s = testutil::random_stats(n, rng);
    for (int i = 0; i < n; ++i) {
      CHECK(dissimilarity(s, i, i) == doctest::Approx(0.0).epsilon(1e-10));
      for (int j = i + 1; j < n; ++j) {
        const double d = dissimilarity(s, i, j);
        CHECK(d == doctest::Approx(dissimilarity(s, j, i)).epsilon(1e-14));
        CHECK(d >= 0.0);
        CHECK(d <= std::sqrt(2.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("make_market_stats: invariant violations rejected") {
  Eigen::VectorXd mu(2);
  mu << 0.1, 0.1;
  SUBCASE("asymmetric sigma") {
    Eigen::MatrixXd sig(2, 2);
    sig << 0.04, 0.02, 0.01, 0.09;
    CHECK_THROWS_AS(testutil::stats_from(mu, sig), DataError);
  }
  SUBCASE("indefinite sigma") {
    Eigen::MatrixXd sig(2, 2);
    sig << 0.04, 0.08, 0.08, 0.04;  // eigenvalues -0.04, 0.12
    CHECK_THROWS_AS(testutil::stats_from(mu, sig), DataError);
  }
  SUBCASE("negative diagonal") {
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 2);
    sig(0, 0) = -0.01;
    sig(1, 1) = 0.04;
    CHECK_THROWS_AS(testutil::stats_from(mu, sig), DataError);
  }
}

TEST_CASE("returns CSV round-trip and validation") {
  Rng rng(13);
  Eigen::MatrixXd r(5, 3);
  for (int t = 0; t < 5; ++t)
    for (int i = 0; i < 3; ++i) r(t, i) = rng.normal(0.01, 0.05);
  ReturnsPanel p;
  p.returns = r;
  p.periods_per_year = 12;
  p.period_labels = {"2015-01", "2015-02", "2015-03", "2015-04", "2015-05"};
  p.item_ids = {"AAA", "BBB", "CCC"};

  std::ostringstream out;
  write_returns_csv(p, out);
  std::istringstream in(out.str());
  ReturnsPanel q = load_returns_csv(in, 12);
  CHECK(q.period_labels == p.period_labels);
  CHECK(q.item_ids == p.item_ids);
  CHECK((q.returns - p.returns).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("non-contiguous periods rejected") {
    std::istringstream bad("period,item_id,return\n2015-01,A,0.01\n2015-03,A,0.02\n");
    CHECK_THROWS_AS(load_returns_csv(bad, 12), DataError);
  }
  SUBCASE("missing cell rejected") {
    std::istringstream bad("period,item_id,return\n2015-01,A,0.01\n2015-01,B,0.02\n2015-02,A,0.00\n");
    CHECK_THROWS_AS(load_returns_csv(bad, 12), DataError);
  }
  SUBCASE("bad number carries the line") {
    std::istringstream bad("period,item_id,return\n2015-01,A,zero\n");
    CHECK_THROWS_WITH_AS(load_returns_csv(bad, 12),
                         doctest::Contains("line 2"), DataError);
  }
}
