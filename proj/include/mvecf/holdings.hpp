#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mvecf/market_stats.hpp"

namespace mvecf {

// Sparse binary user-holdings matrix. rows[u] is the sorted list of item
// indices with y_ui = 1. Ingested matrices have no empty rows; split
// pieces may.
struct InteractionMatrix {
  int m = 0;
  int n = 0;
  std::vector<std::vector<int>> rows;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  const std::vector<int>& row(int u) const { return rows[u]; }
  bool holds(int u, int i) const;
  std::size_t entry_count() const;
};

// Builds a deduplicated matrix from (user_id, item_id) pairs. Users with
// fewer than min_holdings entries are dropped; id maps are sorted
// lexicographically. Throws DataError when nothing survives.
InteractionMatrix make_interactions(const std::vector<std::pair<std::string, std::string>>& pairs,
                                    int min_holdings = 1);

// CSV contract: header `user_id,item_id`.
InteractionMatrix load_holdings(std::istream& in, int min_holdings = 1);
InteractionMatrix load_holdings_file(const std::string& path, int min_holdings = 1);
void write_holdings_csv(const InteractionMatrix& mat, std::ostream& out);

struct Split {
  InteractionMatrix train, test, validation;
};

// Per-user random partition at the given ratios (default 8:1:1). test and
// validation each receive floor(h * r / sum) entries; the remainder stays in
// train, so users with < 3 holdings keep everything in train. Each user's
// shuffle is seeded from (seed, user_id), making the result independent of
// user iteration order.
Split split_dataset(const InteractionMatrix& full, std::array<int, 3> ratios = {8, 1, 1},
                    std::uint64_t seed = 0);

// One yearly experiment unit: interactions of year T, moments from the
// estimation window, and the following ex-post window.
struct SubDataset {
  InteractionMatrix full;
  InteractionMatrix train, test, validation;
  MarketStats stats;
  ReturnsPanel expost_panel;
  int year_label = 0;
  std::vector<std::string> excluded_items;  // held in year T but without return coverage
};

struct BuildYearlyOptions {
  int est_years = 5;
  int post_years = 5;
  bool annualize = false;
  std::optional<double> diagonal_loading;  // nullopt => 1e-6 * mean diagonal
  std::array<int, 3> split_ratios{8, 1, 1};
  std::uint64_t split_seed = 0;
};

// Restricts year-T holdings to items fully covered by the returns panel,
// estimates moments on years T-est_years+1..T, and keeps years T+1..T+post_years
// for ex-post evaluation. Period labels must be YYYY-MM.
SubDataset build_yearly(const std::map<int, InteractionMatrix>& holdings_by_year,
                        const ReturnsPanel& returns, int year, const BuildYearlyOptions& opts = {});

}  // namespace mvecf
