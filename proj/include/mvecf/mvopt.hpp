#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mvecf/market_stats.hpp"

namespace mvecf {

// min (gamma/2) w' Sigma w - mu' w over the simplex {sum w = 1, w >= 0},
// restricted to candidate_items.
struct MVProblem {
  std::vector<int> candidate_items;
  Eigen::VectorXd mu_sub;
  Eigen::MatrixXd sigma_sub;
  double gamma = 3.0;
};

MVProblem restrict_problem(const MarketStats& stats, const std::vector<int>& items, double gamma);

struct MVSolution {
  Eigen::VectorXd weights;
  int iterations = 0;
  std::vector<double> objective_trace;  // one entry per projected-gradient step
};

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

// Projected gradient with fixed step 1/L, L a Gershgorin bound on
// gamma * ||Sigma||. Convergence is declared by the simplex KKT check:
// max_{a in support} grad_a <= min_b grad_b + tol. Throws NonconvergenceError
// (carrying the best iterate) when max_iters is exhausted first.
MVSolution solve_mv(const MVProblem& problem, double tol = 1e-8, int max_iters = 100000);

// Two-step baseline: keep the k_filter best non-held items by base score,
// solve the mean-variance problem over those candidates plus the user's
// current holdings, and order candidates by optimal weight (ties: base
// score, then item index). Returns the first k_out item indices.
std::vector<int> two_step_rerank(const Eigen::VectorXd& base_scores,
                                 const std::vector<int>& holdings, const MarketStats& stats,
                                 int k_filter, int k_out, double gamma, double tol = 1e-8,
                                 int max_iters = 100000);

}  // namespace mvecf
