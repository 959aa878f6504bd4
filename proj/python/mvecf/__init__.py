"""Mean-variance efficient collaborative filtering for stock recommendation.

Thin Python layer over the C++ core: market moment estimation, WMF/MVECF
training, BPR baselines, mean-variance optimization, and the evaluation
pipeline. Configs and reports cross the boundary as JSON.
"""

import json as _json

from ._core import (  # noqa: F401
    ConfigError,
    DataError,
    FactorModel,
    FitResult,
    Hyperparams,
    InteractionMatrix,
    LossRecord,
    MarketStats,
    ModifiedRatingsRow,
    NumericalError,
    PortfolioReport,
    RankingConfig,
    RecommendationList,
    RelabeledInteractions,
    ReturnsPanel,
    Split,
    SynthConfig,
    UserPortfolioRow,
    __version__,
    correlation,
    dissimilarity,
    estimate_moments,
    expost_metrics,
    fit_als_dense,
    fit_bpr,
    fit_mvecf_reg,
    fit_mvecf_wmf,
    fit_wmf,
    gen_holdings,
    gen_returns,
    load_holdings,
    load_model,
    load_returns_csv,
    loss_mv_reg,
    loss_mv_wmf_form,
    make_market_stats,
    map_at_k,
    mv_efficient_relabel,
    mv_ratings,
    portfolio_metrics,
    recall_at_k,
    save_model,
    set_threads,
    sharpe_ratio,
    solve_mv,
    split_dataset,
    topk_recommend,
    two_step_rerank,
)
from . import _core as _impl


def default_config():
    """Fully populated default experiment configuration as a dict."""
    return _json.loads(_impl.default_config())


def run_experiment(config):
    """Run the end-to-end pipeline; accepts a dict, returns the report dict."""
    return _json.loads(_impl.run_experiment(_json.dumps(config)))


def run_sweep(config):
    """Run the lambda_mv x gamma grid; returns the sweep summary dict."""
    return _json.loads(_impl.run_sweep(_json.dumps(config)))
