#pragma once

#include <cstdint>
#include <functional>
#include <ostream>

#include "mvecf/mvecf_model.hpp"
#include "mvecf/rng.hpp"
#include "mvecf/wmf.hpp"

namespace mvecf {

struct RankingConfig {
  int l = 30;
  double alpha = 1e-3;
  double lambda_reg = 1e-5;
  double tau_dist = 0.9;  // distance threshold for the novelty triple set
  double beta = 0.8;      // probability of sampling from the restricted set
  int epochs = 50;
  std::uint64_t seed = 42;
  int sample_retries = 1000;

  void validate() const;
};

// Item-pair distance accessor, typically dissimilarity(stats, i, j).
using DistFn = std::function<double(int, int)>;

struct Triple {
  int u, i, j;  // i positive, j negative for user u
};

// Uniformly random user (among users with >= 1 positive and >= 1 negative),
// positive, and negative; plain BPR sampling.
Triple sample_triple(const InteractionMatrix& positives, Rng& rng);

// With probability beta, rejection-samples a triple with dist(i, j) <
// tau_dist; otherwise plain sampling. Exhausting the retry bound raises
// DataError naming the user.
Triple sample_triple_nov(const InteractionMatrix& positives, const DistFn& dist,
                         const RankingConfig& cfg, Rng& rng);

// -log sigmoid(yhat_ui - yhat_uj).
double bpr_triple_loss(const FactorModel& model, const Triple& t);

// SGD over entry_count() triples per epoch; per-epoch mean triple loss is
// recorded in the trace. Users whose row covers every item are skipped with
// a warning. Pass dist to train the novelty-enhanced variant.
FitResult fit_bpr(const InteractionMatrix& positives, const RankingConfig& cfg,
                  const DistFn* dist = nullptr);

struct RelabeledInteractions {
  InteractionMatrix positives;  // same user/item universe as the input
  double tau_s = 0.0;           // rating threshold actually used
  std::size_t neg_to_pos = 0;
  std::size_t pos_to_neg = 0;
  std::size_t original_negatives = 0;
};

// MV-efficient sampling: computes y_tilde for every pair, sets tau_s to the
// (1 - conversion_fraction) quantile over the original negatives, and
// relabels y_tilde > tau_s positive / < tau_s negative (ties keep the
// original label). Degenerate all-equal negative ratings raise
// NumericalError.
RelabeledInteractions mv_efficient_relabel(const InteractionMatrix& train,
                                           const MarketStats& stats, const Hyperparams& hyper,
                                           double conversion_fraction = 0.01);

// CSV export of every pair: header `user_id,item_id,label`.
void write_relabeled_csv(const RelabeledInteractions& relabeled, std::ostream& out);

}  // namespace mvecf
