"""Event-driven network simulator: determinism, conservation laws, and
agreement with the analytic steady state."""

import numpy as np
import pytest

from poa_lab.analytics import CtmcParams, NetworkConfig, fpi_rates, steady_state, typical_rate
from poa_lab.engine import (
    Histogram,
    RoundEngine,
    SimConfig,
    histogram,
    ks_statistic,
    run_decoupled,
    run_sim,
)


CFG = SimConfig(n1=10, n2=90, d1=32, d2=25, d_s=15, delta=10, blocks=20000, seed=11)


def test_determinism():
    a = run_sim(CFG)
    b = run_sim(CFG)
    assert a.rho_pool == b.rho_pool
    assert a.virtual_time == b.virtual_time
    assert np.array_equal(a.block_counts, b.block_counts)
    assert np.array_equal(a.pool_gaps, b.pool_gaps)


def test_seed_changes_trajectory():
    a = run_sim(CFG)
    b = run_sim(SimConfig(**{**CFG.__dict__, "seed": 12}))
    assert a.virtual_time != b.virtual_time


def test_block_conservation():
    rep = run_sim(CFG)
    assert rep.block_counts.sum() == CFG.blocks
    assert rep.block_counts.shape == (1 + CFG.n2,)


def test_round_invariants():
    eng = RoundEngine(SimConfig(n1=5, n2=20, d1=26, d2=21, d_s=13,
                                delta=4, blocks=1, seed=3))
    aow = np.zeros(21, dtype=int)
    for _ in range(3000):
        out = eng.next_round()
        assert out.duration > 0
        assert 0 <= out.winner < 21
        assert set(np.unique(out.ringed)) <= {False, True}
        # AoW law: +1 per effective ring, reset to zero for the winner
        aow = aow + out.ringed.astype(int)
        aow[out.winner] = 0
        assert np.array_equal(aow, eng.aow)


def test_pow_mode_proportional_shares():
    cfg = SimConfig(n1=10, n2=90, d1=32, d2=25, d_s=15, delta=10,
                    blocks=40000, seed=5, mode="pow", pow_difficulty=24.0)
    rep = run_sim(cfg)
    share = rep.block_counts[0] / rep.blocks
    p = 0.1
    sigma = np.sqrt(p * (1 - p) / rep.blocks)
    assert abs(share - p) < 4 * sigma


def test_rates_match_fixed_point():
    cfg = SimConfig(n1=10, n2=90, d1=32, d2=25, d_s=15, delta=10,
                    blocks=100_000, seed=2)
    rep = run_sim(cfg)
    sol = fpi_rates(NetworkConfig(100, 10, 32, 25, 15, 10))
    assert rep.rho_pool == pytest.approx(sol.rho_pool, rel=0.03)
    assert rep.rho_solo == pytest.approx(sol.rho_solo, rel=0.03)


def test_decoupled_occupancy_matches_steady_state():
    params = CtmcParams(lambda_s=10 / 2**15, lambda_b1=10 / 2**32,
                        lambda_b2=10 / 2**25, lambda_o=2.4e-6, delta=10)
    occ = run_decoupled(params, events=300_000, seed=9)
    ss = steady_state(params)
    assert occ.p0 == pytest.approx(ss.p0, rel=0.05)
    for i in range(5):
        assert occ.p[i] == pytest.approx(ss.p[i], rel=0.08)
        assert occ.p_bar[i] == pytest.approx(ss.p_bar[i], rel=0.08)


def test_isolated_miner_rate():
    """n2 = 0: the single pool's block rate is the analytic typical rate
    with no exterior."""
    cfg = SimConfig(n1=8, n2=0, d1=30, d2=24, d_s=14, delta=6,
                    blocks=60_000, seed=4)
    rep = run_sim(cfg)
    params = CtmcParams(lambda_s=8 / 2**14, lambda_b1=8 / 2**30,
                        lambda_b2=8 / 2**24, lambda_o=0.0, delta=6)
    assert rep.rho_pool == pytest.approx(typical_rate(params), rel=0.02)


def test_solo_aggregation_active():
    cfg = SimConfig(n1=10, n2=5000, d1=32, d2=25, d_s=15, delta=10,
                    blocks=4000, seed=8)
    rep = run_sim(cfg)
    assert rep.solo_aggregated
    assert rep.block_counts.sum() == cfg.blocks
    assert rep.rho_solo > 0


def test_ks_statistic_consistent_and_discriminating():
    rng = np.random.default_rng(77)
    rate = 3.5
    samples = np.sort(rng.exponential(1.0 / rate, size=20_000))
    good = ks_statistic(samples, rate)
    assert good.passed
    assert good.critical == pytest.approx(1.36 / np.sqrt(20_000), rel=1e-9)
    bad = ks_statistic(samples, 2 * rate)
    assert not bad.passed
    with pytest.raises(ValueError):
        ks_statistic(samples[:50], rate)


def test_histogram_basics():
    samples = np.array([0.5, 1.5, 2.5, 3.5])
    h = histogram(samples, 4)
    assert isinstance(h, Histogram)
    assert len(h.density) == 4
    widths = np.diff(h.edges)
    assert np.sum(h.density * widths) == pytest.approx(1.0, rel=1e-12)
    assert len(h.centers) == 4
    with pytest.raises(ValueError):
        histogram(samples, 1)
