#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mvecf/holdings.hpp"

namespace mvecf {

struct Hyperparams {
  int l = 30;               // latent dimension
  double lambda_reg = 1e-3; // L2 weight
  double c_pos = 10.0;      // confidence for y = 1
  double c_neg = 1.0;       // confidence for y = 0
  double lambda_mv = 10.0;  // mean-variance regularization weight
  double gamma = 3.0;       // risk aversion
  double alpha = 1e-3;      // gradient-descent learning rate
  int max_iters = 50;       // ALS sweeps / GD epochs
  double tol = 1e-6;        // relative loss-change stopping threshold
  std::uint64_t seed = 42;

  void validate() const;
};

struct FactorModel {
  Eigen::MatrixXd P;  // m x l
  Eigen::MatrixXd Q;  // n x l

  int users() const { return static_cast<int>(P.rows()); }
  int items() const { return static_cast<int>(Q.rows()); }
  int dim() const { return static_cast<int>(P.cols()); }
  // Row u of P Q': the predicted ratings of user u.
  Eigen::VectorXd predict(int u) const;
};

struct LossRecord {
  int step = 0;            // half-steps for ALS, epochs for gradient descent
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};
using LossTrace = std::vector<LossRecord>;

struct FitResult {
  FactorModel model;
  LossTrace trace;
};

// Per-entry target and positive confidence, materialized one row (or column)
// at a time so the MVECF restructuring never stores an m x n matrix.
class RatingTarget {
 public:
  virtual ~RatingTarget() = default;
  virtual int users() const = 0;
  virtual int items() const = 0;
  virtual void user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const = 0;
  virtual void item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const = 0;
};

// Ordinary WMF targets: t = y in {0,1}, conf = c_pos where held else c_neg.
class WmfTargets final : public RatingTarget {
 public:
  WmfTargets(InteractionMatrix train, double c_pos, double c_neg);
  int users() const override { return train_.m; }
  int items() const override { return train_.n; }
  void user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;
  void item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;
  const InteractionMatrix& train() const { return train_; }

 private:
  InteractionMatrix train_;
  double c_pos_, c_neg_;
};

WmfTargets wmf_targets(const InteractionMatrix& train, const Hyperparams& hyper);

// Arbitrary dense targets; used by tests and the Python bindings.
class DenseTargets final : public RatingTarget {
 public:
  DenseTargets(Eigen::MatrixXd target, Eigen::MatrixXd conf);
  int users() const override { return static_cast<int>(target_.rows()); }
  int items() const override { return static_cast<int>(target_.cols()); }
  void user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;
  void item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const override;

 private:
  Eigen::MatrixXd target_, conf_;
};

// Held-out positive pairs for validation-loss logging.
using PairList = std::vector<std::pair<int, int>>;

// N(0, (0.1/sqrt(l))^2) entries seeded from hyper.seed.
FactorModel init_model(int m, int n, const Hyperparams& hyper);

// Sum_{u,i} c (t - p_u.q_i)^2 + lambda (|P|^2 + |Q|^2).
double wmf_objective(const RatingTarget& targets, const FactorModel& model, double lambda_reg);

// Squared-error loss over held-out positives, weighted by c_pos; the norm
// and MV terms have no per-entry restriction and are omitted.
double validation_loss(const FactorModel& model, const PairList& val, double c_pos);

// Alternating exact least squares. Records the objective after every
// half-step; stops when the relative loss change over a full sweep drops
// below hyper.tol or after hyper.max_iters sweeps. With lambda_reg = 0 a
// singular normal-equations matrix raises NumericalError.
FitResult fit_als(const RatingTarget& targets, const Hyperparams& hyper,
                  const FactorModel* init = nullptr, const PairList* val = nullptr);

// Text dump: header line "MVECF_FACTOR_MODEL <version> <m> <n> <l>" followed
// by the rows of P then Q, 17 significant digits.
void save_model(const FactorModel& model, const std::string& path);
FactorModel load_model(const std::string& path);

}  // namespace mvecf
