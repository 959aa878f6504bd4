#include "mvecf/market_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mvecf/detail/csv.hpp"
#include "mvecf/errors.hpp"

namespace mvecf {

namespace {

// Accepts YYYY-MM or plain integer labels; returns a sortable key and checks
// contiguity of consecutive keys.
bool parse_month_label(const std::string& s, long& key) {
  if (s.size() == 7 && s[4] == '-') {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i == 4) continue;
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    long year = std::stol(s.substr(0, 4));
    long month = std::stol(s.substr(5, 2));
    if (month < 1 || month > 12) return false;
    key = year * 12 + (month - 1);
    return true;
  }
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-') return false;
  try {
    key = std::stol(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

void validate_panel(const ReturnsPanel& panel) {
  const auto T = panel.returns.rows();
  const auto n = panel.returns.cols();
  if (static_cast<Eigen::Index>(panel.period_labels.size()) != T)
    throw DataError("returns panel: period_labels size does not match row count");
  if (static_cast<Eigen::Index>(panel.item_ids.size()) != n)
    throw DataError("returns panel: item_ids size does not match column count");
  if (panel.periods_per_year <= 0) throw DataError("returns panel: periods_per_year must be positive");
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = panel.returns(t, i);
      if (!std::isfinite(r))
        throw DataError("returns panel: non-finite return at period " + panel.period_labels[t] +
                        ", item " + panel.item_ids[i]);
      if (r <= -1.0)
        throw DataError("returns panel: return <= -1 at period " + panel.period_labels[t] +
                        ", item " + panel.item_ids[i]);
    }
}

ReturnsPanel load_returns_csv(std::istream& in, int periods_per_year) {
  auto rows = detail::read_csv(in, {"period", "item_id", "return"}, "returns csv");

  std::set<std::string> item_set;
  std::map<long, std::string> period_by_key;
  for (const auto& r : rows) {
    item_set.insert(r[1]);
    long key = 0;
    if (!parse_month_label(r[0], key))
      throw DataError("returns csv: unparseable period label '" + r[0] + "' (want YYYY-MM or integer)");
    auto it = period_by_key.find(key);
    if (it != period_by_key.end() && it->second != r[0])
      throw DataError("returns csv: period labels '" + it->second + "' and '" + r[0] + "' collide");
    period_by_key[key] = r[0];
  }

  // Contiguity across the sorted keys.
  long prev = 0;
  bool first = true;
  for (const auto& [key, label] : period_by_key) {
    if (!first && key != prev + 1)
      throw DataError("returns csv: periods are not contiguous around '" + label + "'");
    prev = key;
    first = false;
  }

  ReturnsPanel panel;
  panel.periods_per_year = periods_per_year;
  panel.item_ids.assign(item_set.begin(), item_set.end());
  std::map<long, Eigen::Index> period_index;
  for (const auto& [key, label] : period_by_key) {
    period_index[key] = static_cast<Eigen::Index>(panel.period_labels.size());
    panel.period_labels.push_back(label);
  }
  std::map<std::string, Eigen::Index> item_index;
  for (std::size_t i = 0; i < panel.item_ids.size(); ++i)
    item_index[panel.item_ids[i]] = static_cast<Eigen::Index>(i);

  const auto T = static_cast<Eigen::Index>(panel.period_labels.size());
  const auto n = static_cast<Eigen::Index>(panel.item_ids.size());
  Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(T, n);
  panel.returns.resize(T, n);
  std::size_t lineno = 1;
  for (const auto& r : rows) {
    ++lineno;
    long key = 0;
    parse_month_label(r[0], key);
    const auto t = period_index.at(key);
    const auto i = item_index.at(r[1]);
    if (seen(t, i) != 0.0)
      throw DataError("returns csv: line " + std::to_string(lineno) + ": duplicate (period, item) = (" +
                      r[0] + ", " + r[1] + ")");
    seen(t, i) = 1.0;
    panel.returns(t, i) = detail::parse_double(r[2], lineno, "returns csv");
  }
  if (seen.sum() != static_cast<double>(T * n))
    throw DataError("returns csv: panel is not rectangular (every item needs every period)");
  validate_panel(panel);
  return panel;
}

ReturnsPanel load_returns_csv_file(const std::string& path, int periods_per_year) {
  auto f = detail::open_file(path);
  return load_returns_csv(f, periods_per_year);
}

void write_returns_csv(const ReturnsPanel& panel, std::ostream& out) {
  out << "period,item_id,return\n";
  out.precision(17);
  for (Eigen::Index t = 0; t < panel.periods(); ++t)
    for (Eigen::Index i = 0; i < panel.items(); ++i)
      out << panel.period_labels[t] << ',' << panel.item_ids[i] << ',' << panel.returns(t, i) << '\n';
}

MarketStats make_market_stats(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                              std::vector<std::string> item_ids, double diagonal_loading) {
  const auto n = mu.size();
  if (n < 1) throw DataError("market stats: need at least one item");
  if (sigma.rows() != n || sigma.cols() != n)
    throw DataError("market stats: sigma shape does not match mu");
  if (diagonal_loading < 0.0) throw ConfigError("market stats: diagonal loading must be nonnegative");
  if (!mu.allFinite() || !sigma.allFinite()) throw DataError("market stats: non-finite moments");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw DataError("market stats: sigma not symmetric (max asymmetry " + std::to_string(asym) + ")");
  for (Eigen::Index i = 0; i < n; ++i)
    if (sigma(i, i) < 0.0) throw DataError("market stats: negative variance on the diagonal");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  const double floor = -1e-9 * sigma.trace() / static_cast<double>(n);
  if (min_eig < floor)
    throw DataError("market stats: sigma is not positive semidefinite (min eigenvalue " +
                    std::to_string(min_eig) + ")");

  MarketStats stats;
  stats.mu = std::move(mu);
  stats.sigma = std::move(sigma);
  stats.sigma.diagonal().array() += diagonal_loading;
  stats.item_ids = std::move(item_ids);
  if (!stats.item_ids.empty() && static_cast<Eigen::Index>(stats.item_ids.size()) != n)
    throw DataError("market stats: item_ids size does not match mu");
  return stats;
}

MarketStats estimate_moments(const ReturnsPanel& panel, bool annualize,
                             std::optional<double> diagonal_loading) {
  validate_panel(panel);
  const auto T = panel.returns.rows();
  const auto n = panel.returns.cols();
  if (T < 2) throw DataError("estimate_moments: need at least 2 periods, got " + std::to_string(T));

  const double scale = annualize ? static_cast<double>(panel.periods_per_year) : 1.0;
  Eigen::VectorXd mean = panel.returns.colwise().mean();
  Eigen::MatrixXd centered = panel.returns.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(T - 1);
  cov = ((cov + cov.transpose()) / 2.0).eval();  // symmetric by construction

  double loading = diagonal_loading.value_or(1e-6 * cov.trace() / static_cast<double>(n));
  return make_market_stats(mean * scale, cov * scale, panel.item_ids, loading);
}

double sharpe_ratio(const Eigen::VectorXd& weights, const MarketStats& stats) {
  if (weights.size() != stats.mu.size())
    throw ConfigError("sharpe_ratio: weight vector size does not match stats");
  if ((weights.array() < 0.0).any()) throw ConfigError("sharpe_ratio: weights must be nonnegative");
  if (weights.isZero(0.0)) throw ConfigError("sharpe_ratio: weights must not be all zero");
  const double var = weights.dot(stats.sigma * weights);
  if (var <= 0.0) throw NumericalError("sharpe_ratio: portfolio has zero risk");
  return stats.mu.dot(weights) / std::sqrt(var);
}

double correlation(const MarketStats& stats, int i, int j) {
  const double vi = stats.variance(i);
  const double vj = stats.variance(j);
  if (vi <= 0.0 || vj <= 0.0)
    throw NumericalError("correlation: zero-variance item makes correlation undefined");
  return stats.sigma(i, j) / std::sqrt(vi * vj);
}

double dissimilarity(const MarketStats& stats, int i, int j) {
  const double rho = correlation(stats, i, j);
  const double d2 = std::clamp(1.0 - rho, 0.0, 2.0);
  return std::sqrt(d2);
}

}  // namespace mvecf
