"""Block inter-arrival distributions: the pool's mixture density and the
solo exponential rate."""

import numpy as np
import pytest
from scipy import integrate

from poa_lab.analytics import (
    InterArrivalParams,
    NetworkConfig,
    fpi_rates,
    gaussian_tail,
    pool_interarrival_pdf,
    solo_interarrival_rate,
)


CFG = NetworkConfig(n=100, n1=10, d1=32, d2=25, d_s=15, delta=50)


def test_gaussian_tail_values():
    assert gaussian_tail(0.0) == pytest.approx(0.5, abs=1e-15)
    # frozen half-integral of the standard normal beyond one sigma
    assert gaussian_tail(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)
    assert gaussian_tail(-40.0) == 1.0
    assert gaussian_tail(40.0) == pytest.approx(0.0, abs=1e-300)
    assert gaussian_tail(-1.0) + gaussian_tail(1.0) == pytest.approx(1.0, rel=1e-14)


def test_interarrival_params():
    p = InterArrivalParams.from_network(CFG)
    m_ring = 2.0 ** CFG.d_s / CFG.n1
    m_ext = 1.0 / (CFG.n2 * fpi_rates(CFG).rho_solo)
    assert p.t_bar_delta == pytest.approx(CFG.delta * (m_ring + m_ext), rel=1e-12)
    assert p.sigma2_delta == pytest.approx(
        CFG.delta * (m_ring ** 2 + m_ext ** 2), rel=1e-12)
    assert p.eta == pytest.approx(
        CFG.n1 / 2.0 ** CFG.d2 - CFG.n1 / 2.0 ** CFG.d1, rel=1e-12)


def _normalization(cfg):
    p = InterArrivalParams.from_network(cfg)
    lam2 = cfg.n1 / 2.0 ** cfg.d2
    upper = p.t_bar_delta + 60.0 / lam2
    val, _ = integrate.quad(
        lambda t: pool_interarrival_pdf(t, cfg), 0.0, upper,
        points=[p.t_bar_delta], limit=400,
    )
    return val


def test_pdf_normalizes():
    assert abs(_normalization(CFG) - 1.0) < 1e-6


def test_pdf_normalizes_small_pool():
    cfg = NetworkConfig(n=100, n1=30, d1=32, d2=25, d_s=15, delta=50)
    assert abs(_normalization(cfg) - 1.0) < 1e-6


def test_pdf_nonnegative_and_vectorized():
    t = np.linspace(0.0, 5e8, 2000)
    vals = pool_interarrival_pdf(t, CFG)
    assert vals.shape == t.shape
    assert np.all(vals >= 0.0)
    assert np.all(np.isfinite(vals))


def test_pdf_warns_for_small_threshold():
    cfg = NetworkConfig(n=100, n1=10, d1=32, d2=25, d_s=15, delta=5)
    with pytest.warns(RuntimeWarning):
        pool_interarrival_pdf(1.0, cfg)


def test_large_threshold_pointwise_exponential_limit():
    """As the threshold crossing becomes sharp, the density approaches a
    pure high-difficulty exponential below the crossing time."""
    cfg = NetworkConfig(n=1000, n1=100, d1=32, d2=25, d_s=15, delta=4000)
    p = InterArrivalParams.from_network(cfg)
    lam1 = cfg.n1 / 2.0 ** cfg.d1
    for t in (0.1 * p.t_bar_delta, 0.5 * p.t_bar_delta):
        expected = lam1 * np.exp(-lam1 * t)
        assert pool_interarrival_pdf(t, cfg) == pytest.approx(expected, rel=1e-3)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solo_rate():
    sr = solo_interarrival_rate(CFG)
    assert sr.rate == pytest.approx(1.0 / 2.0 ** CFG.d2, rel=1e-12)
    sol = fpi_rates(CFG)
    assert sr.lambda_o == pytest.approx(CFG.n2 * sol.rho_solo, rel=1e-9)


def test_solo_rate_regime_warning():
    cfg = NetworkConfig(n=4, n1=2, d1=20, d2=18, d_s=16, delta=200)
    with pytest.warns(RuntimeWarning):
        solo_interarrival_rate(cfg)
