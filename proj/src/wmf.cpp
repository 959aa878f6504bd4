#include "mvecf/wmf.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "mvecf/errors.hpp"
#include "mvecf/parallel.hpp"
#include "mvecf/rng.hpp"
#include "mvecf/version.hpp"

namespace mvecf {

namespace {
constexpr std::uint64_t kStreamInit = 0x696e6974ULL;  // "init"
}

void Hyperparams::validate() const {
  if (l < 1) throw ConfigError("hyper: latent dimension l must be >= 1");
  if (lambda_reg < 0) throw ConfigError("hyper: lambda_reg must be nonnegative");
  if (!(c_pos > c_neg && c_neg > 0)) throw ConfigError("hyper: need c_pos > c_neg > 0");
  if (lambda_mv < 0) throw ConfigError("hyper: lambda_mv must be nonnegative");
  if (gamma <= 0) throw ConfigError("hyper: gamma must be positive");
  if (alpha <= 0) throw ConfigError("hyper: alpha must be positive");
  if (max_iters < 1) throw ConfigError("hyper: max_iters must be >= 1");
  if (tol < 0) throw ConfigError("hyper: tol must be nonnegative");
}

Eigen::VectorXd FactorModel::predict(int u) const {
  if (u < 0 || u >= users()) throw ConfigError("predict: user index out of range");
  return Q * P.row(u).transpose();
}

WmfTargets::WmfTargets(InteractionMatrix train, double c_pos, double c_neg)
    : train_(std::move(train)), c_pos_(c_pos), c_neg_(c_neg) {}

void WmfTargets::user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  target.setZero(train_.n);
  conf.setConstant(train_.n, c_neg_);
  for (int i : train_.rows[u]) {
    target[i] = 1.0;
    conf[i] = c_pos_;
  }
}

void WmfTargets::item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  target.setZero(train_.m);
  conf.setConstant(train_.m, c_neg_);
  for (int u = 0; u < train_.m; ++u)
    if (train_.holds(u, i)) {
      target[u] = 1.0;
      conf[u] = c_pos_;
    }
}

WmfTargets wmf_targets(const InteractionMatrix& train, const Hyperparams& hyper) {
  hyper.validate();
  return WmfTargets(train, hyper.c_pos, hyper.c_neg);
}

DenseTargets::DenseTargets(Eigen::MatrixXd target, Eigen::MatrixXd conf)
    : target_(std::move(target)), conf_(std::move(conf)) {
  if (target_.rows() != conf_.rows() || target_.cols() != conf_.cols())
    throw ConfigError("dense targets: target and confidence shapes differ");
  if (!target_.allFinite()) throw DataError("dense targets: non-finite target");
  if ((conf_.array() <= 0.0).any()) throw DataError("dense targets: confidence must be positive");
}

void DenseTargets::user_row(int u, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  target = target_.row(u);
  conf = conf_.row(u);
}

void DenseTargets::item_col(int i, Eigen::VectorXd& target, Eigen::VectorXd& conf) const {
  target = target_.col(i);
  conf = conf_.col(i);
}

FactorModel init_model(int m, int n, const Hyperparams& hyper) {
  Rng rng = Rng::stream(hyper.seed, kStreamInit);
  const double sd = 0.1 / std::sqrt(static_cast<double>(hyper.l));
  FactorModel model;
  model.P.resize(m, hyper.l);
  model.Q.resize(n, hyper.l);
  for (int u = 0; u < m; ++u)
    for (int k = 0; k < hyper.l; ++k) model.P(u, k) = rng.normal(0.0, sd);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < hyper.l; ++k) model.Q(i, k) = rng.normal(0.0, sd);
  return model;
}

double wmf_objective(const RatingTarget& targets, const FactorModel& model, double lambda_reg) {
  const int m = targets.users();
  std::vector<double> per_user(m, 0.0);
  parallel_for(0, m, [&](int u) {
    Eigen::VectorXd t, c;
    targets.user_row(u, t, c);
    Eigen::VectorXd resid = t - model.Q * model.P.row(u).transpose();
    per_user[u] = (c.array() * resid.array().square()).sum();
  });
  double loss = 0.0;
  for (double v : per_user) loss += v;
  loss += lambda_reg * (model.P.squaredNorm() + model.Q.squaredNorm());
  return loss;
}

double validation_loss(const FactorModel& model, const PairList& val, double c_pos) {
  double loss = 0.0;
  for (const auto& [u, i] : val) {
    const double r = 1.0 - model.P.row(u).dot(model.Q.row(i));
    loss += c_pos * r * r;
  }
  return loss;
}

namespace {

// One exact half-step: for every row u of X, solve
// (B' diag(c_u) B + lambda I) x_u = B' diag(c_u) t_u.
void half_step(const RatingTarget& targets, bool user_side, const Eigen::MatrixXd& fixed,
               Eigen::MatrixXd& solved, double lambda_reg) {
  const int count = user_side ? targets.users() : targets.items();
  parallel_for(0, count, [&](int idx) {
    Eigen::VectorXd t, c;
    if (user_side)
      targets.user_row(idx, t, c);
    else
      targets.item_col(idx, t, c);
    Eigen::MatrixXd gram = fixed.transpose() * c.asDiagonal() * fixed;
    gram.diagonal().array() += lambda_reg;
    Eigen::VectorXd rhs = fixed.transpose() * (c.array() * t.array()).matrix();
    if (lambda_reg == 0.0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      if (!lu.isInvertible())
        throw NumericalError("fit_als: singular normal equations with lambda_reg = 0 at " +
                             std::string(user_side ? "user " : "item ") + std::to_string(idx));
      solved.row(idx) = lu.solve(rhs).transpose();
    } else {
      solved.row(idx) = gram.ldlt().solve(rhs).transpose();
    }
  });
}

}  // namespace

FitResult fit_als(const RatingTarget& targets, const Hyperparams& hyper, const FactorModel* init,
                  const PairList* val) {
  hyper.validate();
  const int m = targets.users();
  const int n = targets.items();
  if (m < 1 || n < 1) throw DataError("fit_als: need at least one user and one item");

  FitResult out;
  if (init) {
    if (init->users() != m || init->items() != n || init->dim() != hyper.l)
      throw ConfigError("fit_als: init model shape does not match targets/hyper");
    out.model = *init;
  } else {
    out.model = init_model(m, n, hyper);
  }

  auto record = [&](int step) {
    LossRecord rec;
    rec.step = step;
    rec.train_loss = wmf_objective(targets, out.model, hyper.lambda_reg);
    if (val) rec.val_loss = validation_loss(out.model, *val, hyper.c_pos);
    out.trace.push_back(rec);
    if (!std::isfinite(rec.train_loss))
      throw NumericalError("fit_als: non-finite loss at half-step " + std::to_string(step));
    return rec.train_loss;
  };

  double prev_sweep_loss = wmf_objective(targets, out.model, hyper.lambda_reg);
  int step = 0;
  for (int sweep = 0; sweep < hyper.max_iters; ++sweep) {
    half_step(targets, /*user_side=*/true, out.model.Q, out.model.P, hyper.lambda_reg);
    record(++step);
    half_step(targets, /*user_side=*/false, out.model.P, out.model.Q, hyper.lambda_reg);
    const double loss = record(++step);
    const double rel = std::abs(prev_sweep_loss - loss) / std::max(1.0, std::abs(prev_sweep_loss));
    prev_sweep_loss = loss;
    if (rel < hyper.tol) break;
  }
  return out;
}

void save_model(const FactorModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("save_model: cannot open " + path);
  f << "MVECF_FACTOR_MODEL " << kModelFormatVersion << ' ' << model.users() << ' ' << model.items()
    << ' ' << model.dim() << '\n';
  f << std::setprecision(17);
  for (int u = 0; u < model.users(); ++u) {
    for (int k = 0; k < model.dim(); ++k) f << (k ? " " : "") << model.P(u, k);
    f << '\n';
  }
  for (int i = 0; i < model.items(); ++i) {
    for (int k = 0; k < model.dim(); ++k) f << (k ? " " : "") << model.Q(i, k);
    f << '\n';
  }
  if (!f) throw DataError("save_model: write failed for " + path);
}

FactorModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_model: cannot open " + path);
  std::string magic;
  int version = 0, m = 0, n = 0, l = 0;
  f >> magic >> version >> m >> n >> l;
  if (!f || magic != "MVECF_FACTOR_MODEL")
    throw DataError("load_model: " + path + " is not a factor-model dump");
  if (version != kModelFormatVersion)
    throw DataError("load_model: unsupported format version " + std::to_string(version));
  if (m < 1 || n < 1 || l < 1) throw DataError("load_model: bad dimensions in header");
  FactorModel model;
  model.P.resize(m, l);
  model.Q.resize(n, l);
  for (int u = 0; u < m; ++u)
    for (int k = 0; k < l; ++k) f >> model.P(u, k);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < l; ++k) f >> model.Q(i, k);
  if (!f) throw DataError("load_model: truncated dump " + path);
  return model;
}

}  // namespace mvecf
