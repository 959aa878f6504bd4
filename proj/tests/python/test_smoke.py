"""Smoke tests for the Python bindings: generate, fit, recommend, evaluate."""

import json
import math

import numpy as np
import pytest

import mvecf


@pytest.fixture(scope="module")
def market():
    syn = mvecf.SynthConfig()
    syn.n_items = 60
    syn.m_users = 30
    syn.T_periods = 48
    syn.n_sectors = 4
    syn.K_factors = 4
    syn.holdings_min = 5
    syn.holdings_max = 12
    syn.seed = 11
    panel = mvecf.gen_returns(syn)
    holdings = mvecf.gen_holdings(syn)
    stats = mvecf.estimate_moments(panel, True)
    return syn, panel, holdings, stats


def test_moments_and_sharpe(market):
    _, panel, _, stats = market
    assert np.asarray(panel.returns).shape == (48, 60)
    sigma = np.asarray(stats.sigma)
    assert np.allclose(sigma, sigma.T)
    w = np.ones(60) / 60.0
    sr = mvecf.sharpe_ratio(w, stats)
    direct = float(np.asarray(stats.mu) @ w / math.sqrt(w @ sigma @ w))
    assert sr == pytest.approx(direct, rel=1e-12)
    d = mvecf.dissimilarity(stats, 0, 1)
    assert 0.0 <= d <= math.sqrt(2.0)


def test_split_and_fit(market):
    _, _, holdings, stats = market
    split = mvecf.split_dataset(holdings, [8, 1, 1], seed=3)
    total = split.train.entry_count() + split.test.entry_count() + split.validation.entry_count()
    assert total == holdings.entry_count()

    hyper = mvecf.Hyperparams()
    hyper.l = 8
    hyper.max_iters = 6
    fit = mvecf.fit_mvecf_wmf(split.train, stats, hyper)
    losses = [rec.train_loss for rec in fit.trace]
    assert all(b <= a + 1e-10 for a, b in zip(losses, losses[1:]))

    recs = mvecf.topk_recommend(fit.model, holdings.rows, 5)
    report = mvecf.portfolio_metrics(holdings.rows, recs, stats)
    assert isinstance(report.delta_sr, float)
    assert 0.0 <= report.p_sr_improved <= 1.0


def test_reduction_matches_plain_wmf(market):
    _, _, holdings, stats = market
    hyper = mvecf.Hyperparams()
    hyper.l = 6
    hyper.max_iters = 5
    hyper.tol = 0.0
    hyper.lambda_mv = 0.0
    a = mvecf.fit_mvecf_wmf(holdings, stats, hyper)
    b = mvecf.fit_wmf(holdings, hyper)
    assert np.array_equal(np.asarray(a.model.P), np.asarray(b.model.P))
    assert np.array_equal(np.asarray(a.model.Q), np.asarray(b.model.Q))


def test_mv_ratings_row(market):
    _, _, holdings, stats = market
    hyper = mvecf.Hyperparams()
    row = mvecf.mv_ratings(holdings, stats, hyper, 0)
    y_tilde = np.asarray(row.y_tilde)
    c_tilde = np.asarray(row.c_tilde)
    assert y_tilde.shape == (60,)
    assert (c_tilde > 0).all()


def test_solve_mv_simplex():
    mu = np.array([0.1, 0.1])
    sigma = np.diag([0.04, 0.04])
    w = np.asarray(mvecf.solve_mv(mu, sigma, gamma=2.0, tol=1e-10))
    assert w == pytest.approx([0.5, 0.5], abs=1e-8)


def test_relabel(market):
    _, _, holdings, stats = market
    hyper = mvecf.Hyperparams()
    out = mvecf.mv_efficient_relabel(holdings, stats, hyper, 0.01)
    frac = out.neg_to_pos / out.original_negatives
    assert 0.005 <= frac <= 0.015


def test_experiment_pipeline(tmp_path):
    cfg = mvecf.default_config()
    cfg["out_dir"] = str(tmp_path / "run")
    cfg["data"]["synthetic"].update(
        n_items=50, m_users=25, T_periods=36, expost_periods=12,
        n_sectors=4, K_factors=4, holdings_min=4, holdings_max=10,
    )
    cfg["hyper"].update(l=6, max_iters=5)
    cfg["eval"]["k"] = 5
    report = mvecf.run_experiment(cfg)
    assert report["schema_version"] == 1
    assert "delta_sr" in report["metrics"]
    on_disk = json.loads((tmp_path / "run" / "report.json").read_text())
    assert on_disk == report


def test_errors_are_typed():
    with pytest.raises(mvecf.ConfigError):
        mvecf.run_experiment({"no_such_key": 1})
