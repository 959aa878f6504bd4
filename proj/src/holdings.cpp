#include "mvecf/holdings.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <set>

#include "mvecf/detail/csv.hpp"
#include "mvecf/errors.hpp"
#include "mvecf/rng.hpp"

namespace mvecf {

bool InteractionMatrix::holds(int u, int i) const {
  const auto& r = rows[u];
  return std::binary_search(r.begin(), r.end(), i);
}

std::size_t InteractionMatrix::entry_count() const {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  return total;
}

InteractionMatrix make_interactions(const std::vector<std::pair<std::string, std::string>>& pairs,
                                    int min_holdings) {
  if (min_holdings < 1) throw ConfigError("make_interactions: min_holdings must be positive");
  std::set<std::string> items;
  std::map<std::string, std::set<std::string>> by_user;
  for (const auto& [user, item] : pairs) {
    if (user.empty() || item.empty()) throw DataError("holdings: empty user or item id");
    items.insert(item);
    by_user[user].insert(item);  // set semantics deduplicate
  }

  InteractionMatrix mat;
  mat.item_ids.assign(items.begin(), items.end());
  std::map<std::string, int> item_index;
  for (std::size_t i = 0; i < mat.item_ids.size(); ++i)
    item_index[mat.item_ids[i]] = static_cast<int>(i);

  for (const auto& [user, held] : by_user) {
    if (static_cast<int>(held.size()) < min_holdings) continue;
    mat.user_ids.push_back(user);
    std::vector<int> row;
    row.reserve(held.size());
    for (const auto& item : held) row.push_back(item_index.at(item));
    std::sort(row.begin(), row.end());
    mat.rows.push_back(std::move(row));
  }
  if (mat.user_ids.empty())
    throw DataError("holdings: no users remain after the min_holdings=" +
                    std::to_string(min_holdings) + " filter");
  mat.m = static_cast<int>(mat.user_ids.size());
  mat.n = static_cast<int>(mat.item_ids.size());
  return mat;
}

InteractionMatrix load_holdings(std::istream& in, int min_holdings) {
  auto rows = detail::read_csv(in, {"user_id", "item_id"}, "holdings csv");
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(rows.size());
  for (auto& r : rows) pairs.emplace_back(std::move(r[0]), std::move(r[1]));
  return make_interactions(pairs, min_holdings);
}

InteractionMatrix load_holdings_file(const std::string& path, int min_holdings) {
  auto f = detail::open_file(path);
  return load_holdings(f, min_holdings);
}

void write_holdings_csv(const InteractionMatrix& mat, std::ostream& out) {
  out << "user_id,item_id\n";
  for (int u = 0; u < mat.m; ++u)
    for (int i : mat.rows[u]) out << mat.user_ids[u] << ',' << mat.item_ids[i] << '\n';
}

Split split_dataset(const InteractionMatrix& full, std::array<int, 3> ratios, std::uint64_t seed) {
  const int denom = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] < 0 || ratios[2] < 0 || denom <= 0)
    throw ConfigError("split_dataset: invalid ratios");

  Split out;
  for (InteractionMatrix* part : {&out.train, &out.test, &out.validation}) {
    part->m = full.m;
    part->n = full.n;
    part->user_ids = full.user_ids;
    part->item_ids = full.item_ids;
    part->rows.assign(full.m, {});
  }
  for (int u = 0; u < full.m; ++u) {
    std::vector<int> items = full.rows[u];
    Rng rng = Rng::keyed(seed, full.user_ids[u]);
    rng.shuffle(items);
    const int h = static_cast<int>(items.size());
    const int n_test = h * ratios[1] / denom;
    const int n_val = h * ratios[2] / denom;
    out.test.rows[u].assign(items.begin(), items.begin() + n_test);
    out.validation.rows[u].assign(items.begin() + n_test, items.begin() + n_test + n_val);
    out.train.rows[u].assign(items.begin() + n_test + n_val, items.end());
    for (InteractionMatrix* part : {&out.train, &out.test, &out.validation})
      std::sort(part->rows[u].begin(), part->rows[u].end());
  }
  return out;
}

namespace {

int label_year(const std::string& label) {
  if (label.size() != 7 || label[4] != '-')
    throw DataError("build_yearly: period label '" + label + "' is not YYYY-MM");
  return std::stoi(label.substr(0, 4));
}

ReturnsPanel slice_panel(const ReturnsPanel& panel, const std::vector<Eigen::Index>& period_idx,
                         const std::vector<Eigen::Index>& item_idx,
                         const std::vector<std::string>& item_ids) {
  ReturnsPanel out;
  out.periods_per_year = panel.periods_per_year;
  out.item_ids = item_ids;
  out.returns.resize(static_cast<Eigen::Index>(period_idx.size()),
                     static_cast<Eigen::Index>(item_idx.size()));
  for (std::size_t t = 0; t < period_idx.size(); ++t) {
    out.period_labels.push_back(panel.period_labels[period_idx[t]]);
    for (std::size_t i = 0; i < item_idx.size(); ++i)
      out.returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
          panel.returns(period_idx[t], item_idx[i]);
  }
  return out;
}

}  // namespace

SubDataset build_yearly(const std::map<int, InteractionMatrix>& holdings_by_year,
                        const ReturnsPanel& returns, int year, const BuildYearlyOptions& opts) {
  auto it = holdings_by_year.find(year);
  if (it == holdings_by_year.end())
    throw DataError("build_yearly: no holdings snapshot for year " + std::to_string(year));
  const InteractionMatrix& snapshot = it->second;
  validate_panel(returns);
  if (opts.est_years < 1 || opts.post_years < 0)
    throw ConfigError("build_yearly: est_years must be >= 1 and post_years >= 0");

  const int est_first = year - opts.est_years + 1;
  const int post_last = year + opts.post_years;
  std::vector<Eigen::Index> est_idx, post_idx;
  for (Eigen::Index t = 0; t < returns.periods(); ++t) {
    const int y = label_year(returns.period_labels[t]);
    if (y >= est_first && y <= year) est_idx.push_back(t);
    if (y > year && y <= post_last) post_idx.push_back(t);
  }
  const auto expect_est = static_cast<std::size_t>(opts.est_years) *
                          static_cast<std::size_t>(returns.periods_per_year);
  if (est_idx.size() != expect_est)
    throw DataError("build_yearly: estimation window " + std::to_string(est_first) + ".." +
                    std::to_string(year) + " needs " + std::to_string(expect_est) + " periods, found " +
                    std::to_string(est_idx.size()));

  // Items held in year T with full return coverage. The panel is rectangular,
  // so coverage is membership.
  std::map<std::string, Eigen::Index> panel_items;
  for (std::size_t i = 0; i < returns.item_ids.size(); ++i)
    panel_items[returns.item_ids[i]] = static_cast<Eigen::Index>(i);

  SubDataset out;
  out.year_label = year;
  std::vector<std::string> kept_ids;
  std::vector<Eigen::Index> kept_panel_idx;
  std::map<int, int> old_to_new;
  for (int i = 0; i < snapshot.n; ++i) {
    auto pit = panel_items.find(snapshot.item_ids[i]);
    if (pit == panel_items.end()) {
      out.excluded_items.push_back(snapshot.item_ids[i]);
      continue;
    }
    old_to_new[i] = static_cast<int>(kept_ids.size());
    kept_ids.push_back(snapshot.item_ids[i]);
    kept_panel_idx.push_back(pit->second);
  }
  if (!out.excluded_items.empty()) {
    std::string names;
    for (const auto& id : out.excluded_items) names += (names.empty() ? "" : ", ") + id;
    std::cerr << "[build_yearly] warning: excluding " << out.excluded_items.size()
              << " item(s) without return coverage: " << names << "\n";
  }
  if (kept_ids.empty()) throw DataError("build_yearly: no held item has return coverage");

  InteractionMatrix full;
  full.item_ids = kept_ids;
  full.n = static_cast<int>(kept_ids.size());
  for (int u = 0; u < snapshot.m; ++u) {
    std::vector<int> row;
    for (int i : snapshot.rows[u]) {
      auto oit = old_to_new.find(i);
      if (oit != old_to_new.end()) row.push_back(oit->second);
    }
    if (row.empty()) continue;  // user loses all holdings with the coverage filter
    std::sort(row.begin(), row.end());
    full.user_ids.push_back(snapshot.user_ids[u]);
    full.rows.push_back(std::move(row));
  }
  full.m = static_cast<int>(full.user_ids.size());
  if (full.m == 0) throw DataError("build_yearly: coverage filter removed every user");

  ReturnsPanel est_panel = slice_panel(returns, est_idx, kept_panel_idx, kept_ids);
  out.stats = estimate_moments(est_panel, opts.annualize, opts.diagonal_loading);
  out.expost_panel = slice_panel(returns, post_idx, kept_panel_idx, kept_ids);

  Split split = split_dataset(full, opts.split_ratios, opts.split_seed);
  out.full = std::move(full);
  out.train = std::move(split.train);
  out.test = std::move(split.test);
  out.validation = std::move(split.validation);
  return out;
}

}  // namespace mvecf
