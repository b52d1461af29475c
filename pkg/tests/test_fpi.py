"""Coupled pool/solo rate equations and the relative-gain gap."""

import math

import pytest

from poa_lab.analytics import (
    NetworkConfig,
    fpi_rates,
    gain_gap_curve,
    realize_ratio,
)


BASE = NetworkConfig(n=100, n1=10, d1=32, d2=25, d_s=15, delta=10)


def test_reference_solution():
    sol = fpi_rates(BASE)
    # frozen from an independent scalar implementation of the iteration
    assert sol.rho_pool == pytest.approx(1.4118874973678785e-07, rel=1e-10)
    assert sol.rho_solo == pytest.approx(2.6722323056988307e-08, rel=1e-10)
    assert sol.g == pytest.approx(0.52835507390464242, rel=1e-9)


def test_fixed_point_residual():
    sol = fpi_rates(BASE)
    assert sol.residual <= 10 * BASE.epsilon


def test_no_pool_advantage_without_members():
    """A pool of one is just another solo miner: the gain gap closes."""
    cfg = NetworkConfig(n=50, n1=1, d1=30, d2=24, d_s=14, delta=8)
    sol = fpi_rates(cfg)
    assert abs(sol.g - 1.0) < 1e-10
    assert sol.rho_pool == pytest.approx(sol.rho_solo, rel=1e-9)


def test_gain_below_one_for_real_pools():
    for n1 in (2, 5, 20, 50, 90):
        cfg = NetworkConfig(n=100, n1=n1, d1=32, d2=25, d_s=15, delta=20)
        sol = fpi_rates(cfg)
        assert sol.g < 1.0
        assert 0.0 < sol.rho_solo < sol.rho_pool


def test_shares_consistent():
    sol = fpi_rates(BASE)
    assert sol.rho_total == pytest.approx(
        sol.rho_pool + BASE.n2 * sol.rho_solo, rel=1e-12)
    assert sol.f_poa == pytest.approx(
        sol.rho_pool / (BASE.n2 * sol.rho_solo), rel=1e-12)
    assert sol.f_pow == pytest.approx(BASE.n1 / BASE.n2, rel=1e-12)
    assert sol.g == pytest.approx(sol.f_poa / sol.f_pow, rel=1e-12)


def test_gain_monotone_in_pool_size():
    gains = []
    for n1 in (2, 5, 10, 20, 40):
        cfg = NetworkConfig(n=100, n1=n1, d1=32, d2=25, d_s=15, delta=10)
        gains.append(fpi_rates(cfg).g)
    assert all(a > b for a, b in zip(gains, gains[1:]))


def test_realize_ratio():
    assert realize_ratio(100, 1.0) == 50
    assert realize_ratio(100, 1e-6) == 1
    assert realize_ratio(99, 0.5) == 33


def test_gap_curve_error_isolation():
    pts = gain_gap_curve(BASE, [0.01, 0.1, 0.5])
    assert len(pts) == 3
    assert all(p.error is None and p.g is not None and p.g < 1.0 for p in pts)
    assert all(p.n1 + p.n2 == BASE.n for p in pts)


def test_invalid_network():
    with pytest.raises(ValueError):
        NetworkConfig(n=10, n1=10, d1=32, d2=25, d_s=15, delta=5)
    with pytest.raises(ValueError):
        NetworkConfig(n=10, n1=2, d1=25, d2=25, d_s=15, delta=5)
