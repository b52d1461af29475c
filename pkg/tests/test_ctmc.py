"""Closed-form steady state of the single-miner chain against an
independent generator-matrix solve."""

import numpy as np
import pytest

from poa_lab.analytics import (
    CtmcParams,
    SteadyState,
    balance_residuals,
    steady_state,
    truncated_generator_solve,
    typical_rate,
)


def _params(d1, d2, d_s, delta, power=1.0, lambda_o=1e-6):
    return CtmcParams(
        lambda_s=power / 2.0 ** d_s,
        lambda_b1=power / 2.0 ** d1,
        lambda_b2=power / 2.0 ** d2,
        lambda_o=lambda_o,
        delta=delta,
    )


REF = _params(32, 25, 15, 10, power=10.0, lambda_o=2.4e-6)


def _sup_diff(a: SteadyState, b: SteadyState) -> float:
    k = min(a.truncation, b.truncation)
    return max(
        abs(a.p0 - b.p0),
        np.max(np.abs(a.p[:k] - b.p[:k])),
        np.max(np.abs(a.p_bar[:k] - b.p_bar[:k])),
    )


def test_closed_form_matches_generator():
    ss = steady_state(REF)
    gen = truncated_generator_solve(REF, ss.truncation + 20)
    assert _sup_diff(ss, gen) < 1e-9


def test_total_mass():
    ss = steady_state(REF, tail_bound=1e-12)
    assert abs(ss.total_mass - 1.0) < 1e-12


def test_balance_residuals_small():
    ss = steady_state(REF)
    res = balance_residuals(REF, ss)
    assert np.max(np.abs(res)) < 1e-12


def test_random_configs_match_generator():
    rng = np.random.default_rng(20260826)
    for _ in range(25):
        d_s = rng.uniform(10, 18)
        d2 = d_s + rng.uniform(2, 8)
        d1 = d2 + rng.uniform(2, 8)
        delta = int(rng.integers(1, 60))
        p = _params(d1, d2, d_s, delta, power=rng.uniform(0.5, 20),
                    lambda_o=10.0 ** rng.uniform(-8, -5))
        ss = steady_state(p)
        gen = truncated_generator_solve(p, ss.truncation + 15)
        assert _sup_diff(ss, gen) < 1e-9
        assert np.max(np.abs(balance_residuals(p, ss))) < 1e-12


def test_equal_difficulties_collapse():
    """With no difficulty drop the long-run block rate is lambda_b1 exactly."""
    p = CtmcParams(lambda_s=1e-3, lambda_b1=1e-6, lambda_b2=1e-6,
                   lambda_o=3e-6, delta=7)
    assert typical_rate(p) == pytest.approx(p.lambda_b1, rel=1e-12)


def test_immediate_threshold_limit():
    """delta = 1 with the ring rate vastly above both block rates gives
    the reduced-difficulty block rate."""
    p = _params(64, 55, 8, 1, power=1.0, lambda_o=1e-7)
    assert p.lambda_s / p.lambda_b2 > 1e12
    assert typical_rate(p) == pytest.approx(p.lambda_b2, rel=1e-12)


def test_rate_sandwich():
    rate = typical_rate(REF)
    assert REF.lambda_b1 < rate < REF.lambda_b2


def test_rate_monotone_in_delta():
    rates = [
        typical_rate(_params(32, 25, 15, d, power=10.0, lambda_o=2.4e-6))
        for d in (1, 3, 10, 30, 100)
    ]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_generator_requires_slack():
    with pytest.raises(ValueError):
        truncated_generator_solve(REF, REF.delta + 2)


def test_invalid_params():
    with pytest.raises(ValueError):
        CtmcParams(1.0, 2e-3, 1e-3, 1e-3, 5)  # lambda_b1 > lambda_b2
    with pytest.raises(ValueError):
        CtmcParams(0.0, 1e-3, 2e-3, 1e-3, 5)  # nonpositive own rate
    with pytest.raises(ValueError):
        # no exterior: the two-sided chain has no stationary distribution
        steady_state(CtmcParams(1.0, 1e-3, 2e-3, 0.0, 5))
