#include "mvecf/mvopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mvecf/errors.hpp"

namespace mvecf {

MVProblem restrict_problem(const MarketStats& stats, const std::vector<int>& items, double gamma) {
  if (items.empty()) throw ConfigError("restrict_problem: empty candidate list");
  std::set<int> seen;
  for (int i : items) {
    if (i < 0 || i >= stats.n_items()) throw ConfigError("restrict_problem: item index out of range");
    if (!seen.insert(i).second) throw ConfigError("restrict_problem: duplicate candidate item");
  }
  MVProblem p;
  p.candidate_items = items;
  p.gamma = gamma;
  const int k = static_cast<int>(items.size());
  p.mu_sub.resize(k);
  p.sigma_sub.resize(k, k);
  for (int a = 0; a < k; ++a) {
    p.mu_sub[a] = stats.mu[items[a]];
    for (int b = 0; b < k; ++b) p.sigma_sub(a, b) = stats.sigma(items[a], items[b]);
  }
  return p;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const int k = static_cast<int>(v.size());
  std::vector<double> sorted(v.data(), v.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (int j = 0; j < k; ++j) {
    cumsum += sorted[j];
    const double t = (cumsum - 1.0) / (j + 1);
    if (sorted[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

namespace {

bool kkt_satisfied(const Eigen::VectorXd& w, const Eigen::VectorXd& grad, double tol) {
  double max_support = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < w.size(); ++a)
    if (w[a] > 0.0) max_support = std::max(max_support, grad[a]);
  return max_support <= grad.minCoeff() + tol;
}

}  // namespace

MVSolution solve_mv(const MVProblem& problem, double tol, int max_iters) {
  const int k = static_cast<int>(problem.mu_sub.size());
  if (k < 1) throw ConfigError("solve_mv: empty problem");
  if (problem.sigma_sub.rows() != k || problem.sigma_sub.cols() != k)
    throw ConfigError("solve_mv: sigma_sub shape mismatch");
  if (problem.gamma <= 0.0) throw ConfigError("solve_mv: gamma must be positive");

  MVSolution sol;
  if (k == 1) {  // forced by the simplex
    sol.weights = Eigen::VectorXd::Ones(1);
    sol.objective_trace.push_back(0.5 * problem.gamma * problem.sigma_sub(0, 0) - problem.mu_sub[0]);
    return sol;
  }

  // Gershgorin bound on the largest eigenvalue of gamma * Sigma.
  double L = 0.0;
  for (int a = 0; a < k; ++a) L = std::max(L, problem.sigma_sub.row(a).cwiseAbs().sum());
  L = std::max(problem.gamma * L, 1e-12);
  const double step = 1.0 / L;

  auto objective = [&](const Eigen::VectorXd& w) {
    return 0.5 * problem.gamma * w.dot(problem.sigma_sub * w) - problem.mu_sub.dot(w);
  };

  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / k);
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd grad = problem.gamma * (problem.sigma_sub * w) - problem.mu_sub;
    if (kkt_satisfied(w, grad, tol)) {
      sol.iterations = it - 1;
      if (sol.objective_trace.empty()) sol.objective_trace.push_back(objective(w));
      sol.weights = w;
      return sol;
    }
    w = project_simplex(w - step * grad);
    sol.objective_trace.push_back(objective(w));
  }
  throw NonconvergenceError(
      "solve_mv: KKT check not satisfied within " + std::to_string(max_iters) + " iterations",
      std::vector<double>(w.data(), w.data() + k));
}

std::vector<int> two_step_rerank(const Eigen::VectorXd& base_scores,
                                 const std::vector<int>& holdings, const MarketStats& stats,
                                 int k_filter, int k_out, double gamma, double tol, int max_iters) {
  const int n = static_cast<int>(base_scores.size());
  if (n != stats.n_items()) throw ConfigError("two_step_rerank: score vector size mismatch");
  std::set<int> held(holdings.begin(), holdings.end());
  std::vector<int> non_held;
  for (int i = 0; i < n; ++i)
    if (!held.count(i)) non_held.push_back(i);
  if (k_out > k_filter || k_filter > static_cast<int>(non_held.size()) || k_out < 1)
    throw InsufficientUniverseError("two_step_rerank: need k_out <= k_filter <= non-held count");

  std::sort(non_held.begin(), non_held.end(), [&](int a, int b) {
    if (base_scores[a] != base_scores[b]) return base_scores[a] > base_scores[b];
    return a < b;
  });
  std::vector<int> candidates(non_held.begin(), non_held.begin() + k_filter);

  std::vector<int> universe = candidates;
  universe.insert(universe.end(), held.begin(), held.end());
  std::sort(universe.begin(), universe.end());
  MVSolution sol = solve_mv(restrict_problem(stats, universe, gamma), tol, max_iters);

  std::vector<double> weight_of(n, 0.0);
  for (std::size_t a = 0; a < universe.size(); ++a) weight_of[universe[a]] = sol.weights[a];

  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    if (weight_of[a] != weight_of[b]) return weight_of[a] > weight_of[b];
    if (base_scores[a] != base_scores[b]) return base_scores[a] > base_scores[b];
    return a < b;
  });
  candidates.resize(k_out);
  return candidates;
}

}  // namespace mvecf
