#include "mvecf/mvecf_model.hpp"

#include <algorithm>
#include <cmath>

#include "mvecf/errors.hpp"
#include "mvecf/parallel.hpp"
#include "mvecf/rng.hpp"

namespace mvecf {

namespace {

constexpr std::uint64_t kStreamRegOrder = 0x6f726472ULL;  // "ordr"

void check_inputs(const InteractionMatrix& train, const MarketStats& stats,
                  const Hyperparams& hyper) {
  hyper.validate();
  if (train.n != stats.n_items())
    throw DataError("mvecf: item universe of holdings (" + std::to_string(train.n) +
                    ") does not match stats (" + std::to_string(stats.n_items()) + ")");
  for (int i = 0; i < stats.n_items(); ++i)
    if (stats.variance(i) <= 0.0)
      throw DataError("mvecf: item " + std::to_string(i) +
                      " has zero variance; apply diagonal loading");
}

// Average covariance of every item with user u's other holdings:
// out[i] = (sum_{j held, j != i} sigma_ij) / #(held j != i), 0 if none.
Eigen::VectorXd avg_cov_with_holdings(const InteractionMatrix& train, const MarketStats& stats,
                                      int u) {
  const int n = train.n;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (int j : train.rows[u]) sum += stats.sigma.col(j);
  const int h = static_cast<int>(train.rows[u].size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const bool held = train.holds(u, i);
    const int cnt = h - (held ? 1 : 0);
    out[i] = cnt > 0 ? (sum[i] - (held ? stats.sigma(i, i) : 0.0)) / cnt : 0.0;
  }
  return out;
}

}  // namespace

ModifiedRatingsRow mv_ratings(const InteractionMatrix& train, const MarketStats& stats,
                              const Hyperparams& hyper, int u) {
  check_inputs(train, stats, hyper);
  if (u < 0 || u >= train.m) throw ConfigError("mv_ratings: user index out of range");
  if (train.rows[u].empty()) throw DataError("mv_ratings: user holds no items");

  const int n = train.n;
  const Eigen::VectorXd avg_cov = avg_cov_with_holdings(train, stats, u);
  ModifiedRatingsRow row;
  row.y_mv.resize(n);
  row.c_mv.resize(n);
  row.y_tilde.resize(n);
  row.c_tilde.resize(n);
  for (int i = 0; i < n; ++i) {
    const double var = stats.variance(i);
    const double y = train.holds(u, i) ? 1.0 : 0.0;
    const double c = y > 0.0 ? hyper.c_pos : hyper.c_neg;
    row.c_mv[i] = 0.5 * hyper.gamma * hyper.lambda_mv * var;
    row.y_mv[i] = (stats.mu[i] / hyper.gamma - 0.5 * avg_cov[i]) / var;
    row.c_tilde[i] = c + row.c_mv[i];
    row.y_tilde[i] = (c * y + row.c_mv[i] * row.y_mv[i]) / row.c_tilde[i];
  }
  return row;
}

MvWmfTargets::MvWmfTargets(InteractionMatrix train, MarketStats stats, Hyperparams hyper)
    : train_(std::move(train)), stats_(std::move(stats)), hyper_(std::move(hyper)) {
  check_inputs(train_, stats_, hyper_);
  for (int u = 0; u < train_.m; ++u)
    if (train_.rows[u].empty())
      throw DataError("mvecf targets: user " + std::to_string(u) + " holds no items");
}

void MvWmfTargets::user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  ModifiedRatingsRow row = mv_ratings(train_, stats_, hyper_, u);
  target = std::move(row.y_tilde);
  conf = std::move(row.c_tilde);
}

void MvWmfTargets::item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  const int m = train_.m;
  const double var = stats_.variance(i);
  const double c_mv = 0.5 * hyper_.gamma * hyper_.lambda_mv * var;
  target.resize(m);
  conf.resize(m);
  for (int u = 0; u < m; ++u) {
    const bool held = train_.holds(u, i);
    double cov_sum = 0.0;
    for (int j : train_.rows[u]) cov_sum += stats_.sigma(i, j);
    if (held) cov_sum -= var;
    const int cnt = static_cast<int>(train_.rows[u].size()) - (held ? 1 : 0);
    const double avg_cov = cnt > 0 ? cov_sum / cnt : 0.0;
    const double y = held ? 1.0 : 0.0;
    const double c = held ? hyper_.c_pos : hyper_.c_neg;
    const double y_mv = (stats_.mu[i] / hyper_.gamma - 0.5 * avg_cov) / var;
    conf[u] = c + c_mv;
    target[u] = (c * y + c_mv * y_mv) / conf[u];
  }
}

double loss_mv_reg(const FactorModel& model, const InteractionMatrix& train,
                   const MarketStats& stats, const Hyperparams& hyper) {
  check_inputs(train, stats, hyper);
  const int m = train.m;
  std::vector<double> per_user(m, 0.0);
  parallel_for(0, m, [&](int u) {
    Eigen::VectorXd yhat = model.Q * model.P.row(u).transpose();
    double fit = 0.0;
    for (int i = 0; i < train.n; ++i) {
      const double y = train.holds(u, i) ? 1.0 : 0.0;
      const double c = y > 0.0 ? hyper.c_pos : hyper.c_neg;
      const double r = y - yhat[i];
      fit += c * r * r;
    }
    const double mv = 0.5 * hyper.gamma * yhat.dot(stats.sigma * yhat) - stats.mu.dot(yhat);
    per_user[u] = fit + hyper.lambda_mv * mv;
  });
  double loss = 0.0;
  for (double v : per_user) loss += v;
  loss += hyper.lambda_reg * (model.P.squaredNorm() + model.Q.squaredNorm());
  return loss;
}

double loss_mv_wmf_form(const FactorModel& model, const InteractionMatrix& train,
                        const MarketStats& stats, const Hyperparams& hyper) {
  check_inputs(train, stats, hyper);
  const int m = train.m;
  std::vector<double> per_user(m, 0.0);
  parallel_for(0, m, [&](int u) {
    Eigen::VectorXd yhat = model.Q * model.P.row(u).transpose();
    Eigen::VectorXd avg_cov = avg_cov_with_holdings(train, stats, u);
    double acc = 0.0;
    for (int i = 0; i < train.n; ++i) {
      const double y = train.holds(u, i) ? 1.0 : 0.0;
      const double c = y > 0.0 ? hyper.c_pos : hyper.c_neg;
      const double c_tilde = c + 0.5 * hyper.gamma * hyper.lambda_mv * stats.variance(i);
      const double lin = 2.0 * c * y - 0.5 * hyper.gamma * hyper.lambda_mv * avg_cov[i] +
                         hyper.lambda_mv * stats.mu[i];
      acc += c_tilde * yhat[i] * yhat[i] - lin * yhat[i] + c * y * y;
    }
    per_user[u] = acc;
  });
  double loss = 0.0;
  for (double v : per_user) loss += v;
  loss += hyper.lambda_reg * (model.P.squaredNorm() + model.Q.squaredNorm());
  return loss;
}

Eigen::MatrixXd grad_mv_reg_users(const FactorModel& model, const InteractionMatrix& train,
                                  const MarketStats& stats, const Hyperparams& hyper) {
  check_inputs(train, stats, hyper);
  const int m = train.m;
  Eigen::MatrixXd grad(m, model.dim());
  const Eigen::MatrixXd sigma_q = stats.sigma * model.Q;          // n x l
  const Eigen::VectorXd q_mu = model.Q.transpose() * stats.mu;    // l
  parallel_for(0, m, [&](int u) {
    const Eigen::VectorXd p = model.P.row(u).transpose();
    Eigen::VectorXd yhat = model.Q * p;
    Eigen::VectorXd weighted(train.n);
    for (int i = 0; i < train.n; ++i) {
      const double y = train.holds(u, i) ? 1.0 : 0.0;
      const double c = y > 0.0 ? hyper.c_pos : hyper.c_neg;
      weighted[i] = c * (y - yhat[i]);
    }
    Eigen::VectorXd g = -2.0 * (model.Q.transpose() * weighted) + 2.0 * hyper.lambda_reg * p +
                        hyper.lambda_mv * (hyper.gamma * (sigma_q.transpose() * yhat) - q_mu);
    grad.row(u) = g.transpose();
  });
  return grad;
}

Eigen::MatrixXd grad_mv_reg_items(const FactorModel& model, const InteractionMatrix& train,
                                  const MarketStats& stats, const Hyperparams& hyper) {
  check_inputs(train, stats, hyper);
  Eigen::MatrixXd grad = 2.0 * hyper.lambda_reg * model.Q;
  for (int u = 0; u < train.m; ++u) {
    const Eigen::VectorXd p = model.P.row(u).transpose();
    Eigen::VectorXd yhat = model.Q * p;
    Eigen::VectorXd coeff = hyper.lambda_mv * (hyper.gamma * (stats.sigma * yhat) - stats.mu);
    for (int i = 0; i < train.n; ++i) {
      const double y = train.holds(u, i) ? 1.0 : 0.0;
      const double c = y > 0.0 ? hyper.c_pos : hyper.c_neg;
      coeff[i] += -2.0 * c * (y - yhat[i]);
    }
    grad.noalias() += coeff * p.transpose();
  }
  return grad;
}

FitResult fit_mvecf_wmf(const InteractionMatrix& train, const MarketStats& stats,
                        const Hyperparams& hyper, const PairList* val) {
  MvWmfTargets targets(train, stats, hyper);
  return fit_als(targets, hyper, nullptr, val);
}

FitResult fit_mvecf_reg(const InteractionMatrix& train, const MarketStats& stats,
                        const Hyperparams& hyper, const PairList* val) {
  check_inputs(train, stats, hyper);
  FitResult out;
  out.model = init_model(train.m, train.n, hyper);
  Rng order_rng = Rng::stream(hyper.seed, kStreamRegOrder);

  std::vector<int> user_order(train.m);
  for (int u = 0; u < train.m; ++u) user_order[u] = u;

  double prev_loss = loss_mv_reg(out.model, train, stats, hyper);
  for (int epoch = 1; epoch <= hyper.max_iters; ++epoch) {
    // User phase: rows step independently, visited in seeded random order.
    order_rng.shuffle(user_order);
    Eigen::MatrixXd user_grad = grad_mv_reg_users(out.model, train, stats, hyper);
    for (int u : user_order) out.model.P.row(u) -= hyper.alpha * user_grad.row(u);
    // Item phase: one batch step at the updated user embeddings.
    Eigen::MatrixXd item_grad = grad_mv_reg_items(out.model, train, stats, hyper);
    out.model.Q -= hyper.alpha * item_grad;

    LossRecord rec;
    rec.step = epoch;
    rec.train_loss = loss_mv_reg(out.model, train, stats, hyper);
    if (val) rec.val_loss = validation_loss(out.model, *val, hyper.c_pos);
    out.trace.push_back(rec);
    if (!std::isfinite(rec.train_loss))
      throw NumericalError("fit_mvecf_reg: diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
    const double rel = std::abs(prev_loss - rec.train_loss) / std::max(1.0, std::abs(prev_loss));
    prev_loss = rec.train_loss;
    if (rel < hyper.tol) break;
  }
  return out;
}

}  // namespace mvecf
