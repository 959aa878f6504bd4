#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mvecf/errors.hpp"
#include "mvecf/wmf.hpp"
#include "test_util.hpp"

using namespace mvecf;

namespace {

Hyperparams small_hyper(int l, double lambda = 1e-3) {
  Hyperparams h;
  h.l = l;
  h.lambda_reg = lambda;
  h.max_iters = 20;
  h.tol = 0.0;
  h.seed = 17;
  return h;
}

DenseTargets random_dense(int m, int n, Rng& rng) {
  Eigen::MatrixXd t(m, n), c(m, n);
  for (int u = 0; u < m; ++u)
    for (int i = 0; i < n; ++i) {
      t(u, i) = rng.normal(0.0, 1.0);
      c(u, i) = 0.5 + rng.uniform01() * 9.5;
    }
  return DenseTargets(t, c);
}

// Independent objective oracle: plain triple loop, no shared code.
double triple_loop_objective(const Eigen::MatrixXd& t, const Eigen::MatrixXd& c,
                             const FactorModel& model, double lambda) {
  double loss = 0.0;
  for (int u = 0; u < t.rows(); ++u)
    for (int i = 0; i < t.cols(); ++i) {
      double pred = 0.0;
      for (int k = 0; k < model.dim(); ++k) pred += model.P(u, k) * model.Q(i, k);
      loss += c(u, i) * (t(u, i) - pred) * (t(u, i) - pred);
    }
  for (int u = 0; u < model.users(); ++u)
    for (int k = 0; k < model.dim(); ++k) loss += lambda * model.P(u, k) * model.P(u, k);
  for (int i = 0; i < model.items(); ++i)
    for (int k = 0; k < model.dim(); ++k) loss += lambda * model.Q(i, k) * model.Q(i, k);
  return loss;
}

}  // namespace

TEST_CASE("fit_als: all-zero targets collapse to the zero model in one sweep") {
  const int m = 6, n = 9;
  DenseTargets targets(Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Ones(m, n));
  Hyperparams h = small_hyper(3);
  h.tol = 1e-12;
  FitResult fit = fit_als(targets, h);
  CHECK(fit.model.P.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fit.model.Q.cwiseAbs().maxCoeff() == 0.0);
  for (int u = 0; u < m; ++u) CHECK(fit.model.predict(u).cwiseAbs().maxCoeff() == 0.0);
  // The zero fixed point is reached within the first sweep; the tol rule
  // confirms it one sweep later.
  CHECK(fit.trace.size() <= 4);
  CHECK(fit.trace[1].train_loss == 0.0);
}

TEST_CASE("fit_als: recovers a planted rank-1 matrix") {
  const int m = 8, n = 10;
  Rng rng(21);
  Eigen::VectorXd u(m), v(n);
  for (int a = 0; a < m; ++a) u[a] = 0.5 + rng.uniform01();
  for (int b = 0; b < n; ++b) v[b] = 0.5 + rng.uniform01();
  Eigen::MatrixXd planted = u * v.transpose();
  DenseTargets targets(planted, Eigen::MatrixXd::Ones(m, n));
  Hyperparams h = small_hyper(1, 1e-6);
  h.max_iters = 50;
  FitResult fit = fit_als(targets, h);
  Eigen::MatrixXd recon = fit.model.P * fit.model.Q.transpose();
  CHECK((recon - planted).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("fit_als: loss trace is non-increasing at every half-step") {
  Rng rng(42);
  DenseTargets targets = random_dense(20, 30, rng);
  FitResult fit = fit_als(targets, small_hyper(5));
  REQUIRE(fit.trace.size() > 2);
  for (std::size_t s = 1; s < fit.trace.size(); ++s)
    CHECK(fit.trace[s].train_loss <= fit.trace[s - 1].train_loss + 1e-10);
}

TEST_CASE("fit_als: user half-step is an exact minimizer (zero gradient)") {
  const int m = 7, n = 11, l = 4;
  Rng rng(33);
  Eigen::MatrixXd t(m, n), c(m, n);
  for (int u = 0; u < m; ++u)
    for (int i = 0; i < n; ++i) {
      t(u, i) = rng.normal(0.0, 1.0);
      c(u, i) = 0.5 + rng.uniform01() * 4.0;
    }
  DenseTargets targets(t, c);
  Hyperparams h = small_hyper(l);
  h.max_iters = 1;
  FactorModel init = init_model(m, n, h);
  FitResult fit = fit_als(targets, h, &init);
  // P rows were solved against the initial Q (the item step does not touch P),
  // so the objective gradient wrt each p_u at (P, Q_init) must vanish.
  for (int u = 0; u < m; ++u) {
    Eigen::VectorXd resid = t.row(u).transpose() - init.Q * fit.model.P.row(u).transpose();
    Eigen::VectorXd grad = -2.0 * init.Q.transpose() * (c.row(u).transpose().array() * resid.array()).matrix() +
                           2.0 * h.lambda_reg * fit.model.P.row(u).transpose();
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-8);
  }
  // Symmetrically, Q was solved against the final P in the item half-step.
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd resid = t.col(i) - fit.model.P * fit.model.Q.row(i).transpose();
    Eigen::VectorXd grad = -2.0 * fit.model.P.transpose() * (c.col(i).array() * resid.array()).matrix() +
                           2.0 * h.lambda_reg * fit.model.Q.row(i).transpose();
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("fit_als: deterministic, and seeded when init is omitted") {
  Rng rng(55);
  DenseTargets targets = random_dense(9, 12, rng);
  Hyperparams h = small_hyper(3);
  h.max_iters = 5;
  FitResult a = fit_als(targets, h);
  FitResult b = fit_als(targets, h);
  CHECK(a.model.P == b.model.P);
  CHECK(a.model.Q == b.model.Q);
  h.seed = 18;
  FitResult c = fit_als(targets, h);
  CHECK(a.model.P != c.model.P);
}

TEST_CASE("wmf_objective matches the independent triple-loop oracle") {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = rng.uniform_int(2, 20);
    const int n = rng.uniform_int(2, 20);
    const int l = rng.uniform_int(1, 6);
    Eigen::MatrixXd t(m, n), c(m, n);
    for (int u = 0; u < m; ++u)
      for (int i = 0; i < n; ++i) {
        t(u, i) = rng.normal(0.0, 1.0);
        c(u, i) = 0.1 + rng.uniform01() * 9.9;
      }
    DenseTargets targets(t, c);
    FactorModel model;
    model.P.resize(m, l);
    model.Q.resize(n, l);
    for (int u = 0; u < m; ++u)
      for (int k = 0; k < l; ++k) model.P(u, k) = rng.normal(0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < l; ++k) model.Q(i, k) = rng.normal(0.0, 1.0);
    const double lambda = rng.uniform01();
    const double fast = wmf_objective(targets, model, lambda);
    const double oracle = triple_loop_objective(t, c, model, lambda);
    CHECK(std::abs(fast - oracle) <= 1e-10 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("fit_als: lambda = 0 singular normal equations raise") {
  DenseTargets targets(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Ones(1, 1));
  Hyperparams h = small_hyper(2, 0.0);  // l=2 > n=1 makes the gram matrix rank-1
  CHECK_THROWS_AS(fit_als(targets, h), NumericalError);
}

TEST_CASE("predict: pinned examples and linearity") {
  FactorModel model;
  model.P = Eigen::MatrixXd::Zero(2, 1);
  model.Q = Eigen::MatrixXd::Zero(3, 1);
  CHECK(model.predict(0).cwiseAbs().maxCoeff() == 0.0);

  model.P(0, 0) = 2.0;
  model.Q(1, 0) = 3.0;
  CHECK(model.predict(0)[1] == doctest::Approx(6.0));

  FactorModel doubled = model;
  doubled.P.row(0) *= 2.0;
  CHECK((doubled.predict(0) - 2.0 * model.predict(0)).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(model.predict(2), ConfigError);
}

TEST_CASE("wmf_targets: confidence follows the holdings") {
  Rng rng(88);
  InteractionMatrix train = testutil::random_interactions(4, 6, 1, 4, rng);
  Hyperparams h;
  WmfTargets targets = wmf_targets(train, h);
  Eigen::VectorXd t, c;
  for (int u = 0; u < train.m; ++u) {
    targets.user_row(u, t, c);
    for (int i = 0; i < train.n; ++i) {
      if (train.holds(u, i)) {
        CHECK(t[i] == 1.0);
        CHECK(c[i] == h.c_pos);
      } else {
        CHECK(t[i] == 0.0);
        CHECK(c[i] == h.c_neg);
      }
    }
  }
  // Column view agrees with the row view.
  Eigen::VectorXd tc, cc;
  targets.item_col(2, tc, cc);
  for (int u = 0; u < train.m; ++u) {
    CHECK(tc[u] == (train.holds(u, 2) ? 1.0 : 0.0));
    CHECK(cc[u] == (train.holds(u, 2) ? h.c_pos : h.c_neg));
  }
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  h.c_neg = 11.0;  // violates c_pos > c_neg
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyperparams{};
  h.l = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = Hyperparams{};
  h.gamma = 0.0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
}

TEST_CASE("model dump round-trips exactly") {
  Rng rng(99);
  FactorModel model;
  model.P.resize(5, 3);
  model.Q.resize(7, 3);
  for (int u = 0; u < 5; ++u)
    for (int k = 0; k < 3; ++k) model.P(u, k) = rng.normal(0.0, 1.0);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 3; ++k) model.Q(i, k) = rng.normal(0.0, 1.0);

  const std::string path = (std::filesystem::temp_directory_path() / "mvecf_model_test.txt").string();
  save_model(model, path);
  FactorModel loaded = load_model(path);
  CHECK(loaded.P == model.P);
  CHECK(loaded.Q == model.Q);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), DataError);
}
