#pragma once

#include "mvecf/market_stats.hpp"
#include "mvecf/wmf.hpp"

namespace mvecf {

// Modified ratings of one user row. For every item i:
//   c_mv    = (gamma/2) * lambda_mv * sigma_i^2
//   y_mv    = (mu_i/gamma - avg_cov_i/2) / sigma_i^2
//   c_tilde = c_ui + c_mv
//   y_tilde = (c_ui y_ui + c_mv y_mv) / c_tilde
// where avg_cov_i is the average covariance of i with the user's other
// holdings: sum_{j held, j != i} sigma_ij divided by the number of such
// items (zero when the user holds nothing besides i).
struct ModifiedRatingsRow {
  Eigen::VectorXd y_mv, c_mv, y_tilde, c_tilde;
};

ModifiedRatingsRow mv_ratings(const InteractionMatrix& train, const MarketStats& stats,
                              const Hyperparams& hyper, int u);

// The restructured objective's targets; rows and columns are recomputed on
// demand from the sparse holdings, never stored densely.
class MvWmfTargets final : public RatingTarget {
 public:
  MvWmfTargets(InteractionMatrix train, MarketStats stats, Hyperparams hyper);
  int users() const override { return train_.m; }
  int items() const override { return train_.n; }
  void user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;
  void item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;

 private:
  InteractionMatrix train_;
  MarketStats stats_;
  Hyperparams hyper_;
};

// WMF loss plus the Markowitz penalty on predicted holdings:
//   sum_{u,i} c_ui (y - yhat)^2 + lambda (|P|^2 + |Q|^2)
//   + lambda_mv sum_u ((gamma/2) yhat_u' Sigma yhat_u - mu' yhat_u).
double loss_mv_reg(const FactorModel& model, const InteractionMatrix& train,
                   const MarketStats& stats, const Hyperparams& hyper);

// Same objective with the cross-covariance term anchored to current holdings
// (yhat_uj replaced by the per-holding average over y_uj); equals the
// restructured WMF-form loss up to a model-independent constant.
double loss_mv_wmf_form(const FactorModel& model, const InteractionMatrix& train,
                        const MarketStats& stats, const Hyperparams& hyper);

// Analytic gradients of loss_mv_reg.
Eigen::MatrixXd grad_mv_reg_users(const FactorModel& model, const InteractionMatrix& train,
                                  const MarketStats& stats, const Hyperparams& hyper);
Eigen::MatrixXd grad_mv_reg_items(const FactorModel& model, const InteractionMatrix& train,
                                  const MarketStats& stats, const Hyperparams& hyper);

// Trains the restructured model by ALS over the modified ratings.
FitResult fit_mvecf_wmf(const InteractionMatrix& train, const MarketStats& stats,
                        const Hyperparams& hyper, const PairList* val = nullptr);

// Gradient descent on loss_mv_reg: per epoch, user rows step in seeded
// random order, then the item matrix takes one batch step. Records train and
// validation loss per epoch. Non-finite loss raises NumericalError naming
// the epoch.
FitResult fit_mvecf_reg(const InteractionMatrix& train, const MarketStats& stats,
                        const Hyperparams& hyper, const PairList* val = nullptr);

}  // namespace mvecf
