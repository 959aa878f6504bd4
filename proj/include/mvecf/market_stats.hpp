#pragma once

#include <Eigen/Dense>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mvecf {

// T x n panel of periodic simple returns. Column order matches item_ids.
struct ReturnsPanel {
  Eigen::MatrixXd returns;                 // T x n, each entry > -1
  std::vector<std::string> period_labels;  // size T, contiguous periods
  std::vector<std::string> item_ids;       // size n
  int periods_per_year = 12;

  Eigen::Index periods() const { return returns.rows(); }
  Eigen::Index items() const { return returns.cols(); }
};

// Throws DataError on non-finite entries, returns <= -1, or shape/label
// mismatches.
void validate_panel(const ReturnsPanel& panel);

// CSV contract: header `period,item_id,return`, one row per (period, item),
// periods contiguous and identical across items. Labels are either YYYY-MM
// or plain integers.
ReturnsPanel load_returns_csv(std::istream& in, int periods_per_year = 12);
ReturnsPanel load_returns_csv_file(const std::string& path, int periods_per_year = 12);
void write_returns_csv(const ReturnsPanel& panel, std::ostream& out);

// First two moments of the item universe, per year when annualized.
struct MarketStats {
  Eigen::VectorXd mu;     // length n
  Eigen::MatrixXd sigma;  // n x n, symmetric PSD
  std::vector<std::string> item_ids;

  int n_items() const { return static_cast<int>(mu.size()); }
  double variance(int i) const { return sigma(i, i); }
};

// Validates symmetry (1e-12 absolute) and near-PSD-ness (eigenvalues
// >= -1e-9 * trace/n), then applies diagonal loading. Throws DataError.
MarketStats make_market_stats(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                              std::vector<std::string> item_ids, double diagonal_loading = 0.0);

// Sample mean and unbiased (T-1) covariance of the panel, both scaled by
// periods_per_year when annualize is set. diagonal_loading defaults to
// 1e-6 * mean(diag) so sigma stays usable when T-1 < n.
MarketStats estimate_moments(const ReturnsPanel& panel, bool annualize = false,
                             std::optional<double> diagonal_loading = std::nullopt);

// SR(w) = mu'w / sqrt(w' Sigma w). Throws NumericalError when w' Sigma w
// is zero and ConfigError on bad weights.
double sharpe_ratio(const Eigen::VectorXd& weights, const MarketStats& stats);

double correlation(const MarketStats& stats, int i, int j);

// sqrt(1 - rho_ij), clamped into [0, sqrt(2)]. Throws NumericalError for
// zero-variance items.
double dissimilarity(const MarketStats& stats, int i, int j);

}  // namespace mvecf
