"""Markov-chain analytics for the age-of-work mining model.

Closed-form steady state of the single-miner birth-death-like chain, an
independent linear-system solver over the explicit generator as a
cross-check, the typical miner's block rate, the fixed-point iteration
for coupled pool/solo rates, the relative-gain gap, and the pool's
block inter-arrival density.

Time unit: one hash trial of a unit-power miner, so every rate is a pure
number of the form power / 2^difficulty.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, special


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration exceeded its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class CtmcParams:
    """Transition rates of the single-miner chain.

    lambda_s: effective age-ring generation rate.
    lambda_b1 / lambda_b2: block rates at the high / reduced difficulty.
    lambda_o: aggregate block rate of all exterior miners.
    delta: AoW threshold at which the difficulty drops.
    """

    lambda_s: float
    lambda_b1: float
    lambda_b2: float
    lambda_o: float
    delta: int

    def __post_init__(self):
        if min(self.lambda_s, self.lambda_b1, self.lambda_b2) <= 0:
            raise ValueError("own rates must be positive")
        if self.lambda_o < 0:
            raise ValueError("lambda_o must be nonnegative")
        if self.lambda_b1 > self.lambda_b2:
            raise ValueError("lambda_b1 must not exceed lambda_b2")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")

    def block_rate(self, aow: int) -> float:
        return self.lambda_b1 if aow < self.delta else self.lambda_b2


@dataclass
class SteadyState:
    """Steady-state distribution, truncated where the geometric tail is negligible.

    ``p[i-1]`` is the probability of AoW state i (ring not yet mined this
    height), ``p_bar[i-1]`` of the ringed state at AoW i, for i = 1..truncation.
    """

    p0: float
    p: np.ndarray
    p_bar: np.ndarray
    phi1: float
    phi2: float
    truncation: int

    @property
    def total_mass(self) -> float:
        return self.p0 + self.p.sum() + self.p_bar.sum()


def _ratios(params: CtmcParams):
    ls, lb1, lb2, lo = params.lambda_s, params.lambda_b1, params.lambda_b2, params.lambda_o
    phi1 = ls * lo / ((lb1 + ls) * (lb1 + lo))
    phi2 = ls * lo / ((lb2 + ls) * (lb2 + lo))
    return phi1, phi2


def steady_state(params: CtmcParams, tail_bound: float = 1e-12) -> SteadyState:
    """Closed-form steady state.

    Probabilities follow two geometric regimes split at the AoW threshold;
    the truncation index is the smallest one whose discarded geometric tail
    is below ``tail_bound``.
    """
    if not (0.0 < tail_bound <= 1e-6):
        raise ValueError("tail_bound must be in (0, 1e-6]")
    if params.lambda_o <= 0:
        raise ValueError("steady_state needs a positive exterior rate")
    ls, lb1, lb2, lo = params.lambda_s, params.lambda_b1, params.lambda_b2, params.lambda_o
    d = params.delta
    phi1, phi2 = _ratios(params)
    assert 0.0 < phi2 < 1.0, "geometric ratio must be in (0,1) for positive rates"

    p0 = 1.0 / (1.0 + ls / lb1 + phi1 ** (d - 1) * (ls / lb2 - ls / lb1))

    # smallest K >= delta whose discarded geometric tails (both the plain
    # and the ringed sequence) sum below tail_bound
    head = p0 * phi1 ** (d - 1) * (phi2 + ls / (lb2 + lo))
    k = d
    if head > 0:
        need = math.log(tail_bound * (1.0 - phi2) / head) / math.log(phi2)
        k = d + max(0, math.ceil(need) - 1)
        while head * phi2 ** (k - d + 1) / (1.0 - phi2) >= tail_bound:
            k += 1

    i = np.arange(1, k + 1)
    p = p0 * phi1 ** np.minimum(i, d - 1) * phi2 ** np.maximum(i - (d - 1), 0)
    enter = np.where(i <= d - 1, ls / (lb1 + lo), ls / (lb2 + lo))
    p_bar = (
        p0 * enter
        * phi1 ** np.minimum(i - 1, d - 1)
        * phi2 ** np.maximum(i - 1 - (d - 1), 0)
    )
    return SteadyState(p0, p, p_bar, phi1, phi2, k)


def truncated_generator_solve(params: CtmcParams, k: int) -> SteadyState:
    """Steady state via the explicit transition-rate matrix, an independent
    oracle for the closed forms.

    States 0..k and ringed states 1..k; the ring transition out of state k
    is redirected to the last ringed state. Solves the global balance
    system with a normalization row.
    """
    if k < params.delta + 10:
        raise ValueError("truncation index must be at least delta + 10")
    ls, lo = params.lambda_s, params.lambda_o
    n = 2 * k + 1  # 0..k then ringed 1..k at offset k
    q = np.zeros((n, n))
    for i in range(k + 1):
        q[i, 0] += params.block_rate(i)
        q[i, k + min(i + 1, k)] += ls
    for i in range(1, k + 1):
        q[k + i, 0] += params.block_rate(i)
        q[k + i, i] += lo
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = linalg.solve(a, b)
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"singular generator system: {exc}") from exc
    phi1, phi2 = _ratios(params)
    return SteadyState(pi[0], pi[1 : k + 1], pi[k + 1 :], phi1, phi2, k)


def balance_residuals(params: CtmcParams, ss: SteadyState) -> np.ndarray:
    """Relative residuals of the per-state balance equations for all retained states."""
    d = params.delta
    res = []
    for i in range(1, ss.truncation + 1):
        lb = params.block_rate(i)
        p_i, pb_i = ss.p[i - 1], ss.p_bar[i - 1]
        p_prev = ss.p0 if i == 1 else ss.p[i - 2]
        for outflow, inflow in (
            ((lb + params.lambda_s) * p_i, params.lambda_o * pb_i),
            ((lb + params.lambda_o) * pb_i, params.lambda_s * p_prev),
        ):
            scale = max(outflow, inflow)
            # deep tail states can underflow to zero on both sides
            res.append(abs(outflow - inflow) / scale if scale > 0 else 0.0)
    return np.asarray(res)


def typical_rate(params: CtmcParams) -> float:
    """Steady-state block generation rate of the typical miner.

    Always sandwiched between the two block rates. ``lambda_o`` may be
    zero here (no exterior competition).
    """
    ls, lb1, lb2, lo = params.lambda_s, params.lambda_b1, params.lambda_b2, params.lambda_o
    if lo < 0:
        raise ValueError("lambda_o must be nonnegative")
    d = params.delta
    ext = (lo / (lb1 + lo)) ** (d - 1) if (lo > 0 or d == 1) else 0.0
    correction = (ls / (lb1 + ls)) ** d * ext * (1.0 / lb2 - 1.0 / lb1)
    return 1.0 / (1.0 / lb1 + correction)


# --- Coupled pool / solo rates ------------------------------------------------


@dataclass(frozen=True)
class NetworkConfig:
    """A network of n unit-power miners: one pool of n1 plus n2 = n - n1 solos."""

    n: int
    n1: int
    d1: float
    d2: float
    d_s: float
    delta: int
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.n1 < 1 or self.n - self.n1 < 1:
            raise ValueError("need n1 >= 1 and n2 = n - n1 >= 1")
        if self.d1 <= self.d2 or self.d2 <= self.d_s:
            raise ValueError("difficulty exponents must satisfy d1 > d2 > d_s")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def n2(self) -> int:
        return self.n - self.n1


@dataclass
class RateSolution:
    rho_pool: float
    rho_solo: float
    rho_total: float
    f_poa: float
    f_pow: float
    g: float
    iterations: int
    residual: float


def _phi(cfg: NetworkConfig, own_base: float, lam_o: float) -> float:
    """Rate-correction term of the coupled rate equations.

    ``own_base`` is the entity's block rate at the high difficulty; the
    correction vanishes as the threshold grows.
    """
    ring_frac = (
        2.0 ** (cfg.d1 + cfg.d2) / (2.0 ** (cfg.d2 + cfg.d_s) + 2.0 ** (cfg.d1 + cfg.d2))
    ) ** cfg.delta
    ext_frac = (lam_o / (own_base + lam_o)) ** (cfg.delta - 1)
    return ring_frac * ext_frac * (2.0 ** cfg.d2 - 2.0 ** cfg.d1)


def fpi_rates(cfg: NetworkConfig, max_iterations: int = 10**6) -> RateSolution:
    """Solve the mutually dependent pool and solo block rates by fixed-point
    iteration, stopping when the relative squared change drops below epsilon.

    Plain iteration; if the change ratio grows for 10 consecutive steps the
    update is damped by averaging with the previous iterate (the fixed
    point is unchanged).
    """
    n1, n2 = cfg.n1, cfg.n2
    rho_pool = n1 / 2.0 ** cfg.d1
    rho_solo = 1.0 / 2.0 ** cfg.d1
    gamma = math.inf
    prev_gamma = math.inf
    rising = 0
    step = 1.0
    phi_pool = phi_solo = 0.0
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        phi_pool = _phi(cfg, n1 / 2.0 ** cfg.d1, n2 * rho_solo)
        phi_solo = _phi(cfg, 1.0 / 2.0 ** cfg.d1, (n2 - 1) * rho_solo + rho_pool)
        new_pool = n1 / (2.0 ** cfg.d1 + phi_pool)
        new_solo = 1.0 / (2.0 ** cfg.d1 + phi_solo)
        if step < 1.0:
            new_pool = step * new_pool + (1.0 - step) * rho_pool
            new_solo = step * new_solo + (1.0 - step) * rho_solo
        gamma = ((new_pool - rho_pool) ** 2 + (new_solo - rho_solo) ** 2) / (
            rho_pool**2 + rho_solo**2
        )
        rho_pool, rho_solo = new_pool, new_solo
        if gamma <= cfg.epsilon:
            break
        if gamma > prev_gamma:
            rising += 1
            if rising >= 10:
                step /= 2.0
                rising = 0
        else:
            rising = 0
        prev_gamma = gamma
    else:
        raise NonConvergenceError(
            f"no convergence after {max_iterations} iterations (residual {gamma:.3e})",
            residual=gamma,
        )
    f_poa = rho_pool / (n2 * rho_solo)
    f_pow = n1 / n2
    return RateSolution(
        rho_pool=rho_pool,
        rho_solo=rho_solo,
        rho_total=rho_pool + n2 * rho_solo,
        f_poa=f_poa,
        f_pow=f_pow,
        g=f_poa / f_pow,
        iterations=iterations,
        residual=gamma,
    )


@dataclass(frozen=True)
class GapPoint:
    ratio: float
    n1: int
    n2: int
    g: Optional[float]
    error: Optional[str] = None


def realize_ratio(n: int, ratio: float) -> int:
    """Integer pool size closest to a target pool/solo power ratio."""
    return max(1, round(n * ratio / (1.0 + ratio)))


def gain_gap_curve(cfg_base: NetworkConfig, ratio_grid: Sequence[float]) -> list[GapPoint]:
    """Relative-gain gap along a grid of pool/solo power ratios.

    Non-convergence at one grid point is recorded on that point; the rest
    of the grid still runs.
    """
    points = []
    for ratio in ratio_grid:
        n1 = realize_ratio(cfg_base.n, ratio)
        try:
            cfg = NetworkConfig(
                cfg_base.n, n1, cfg_base.d1, cfg_base.d2, cfg_base.d_s,
                cfg_base.delta, cfg_base.epsilon,
            )
            sol = fpi_rates(cfg)
            points.append(GapPoint(ratio, n1, cfg.n2, sol.g))
        except (NonConvergenceError, ValueError) as exc:
            points.append(GapPoint(ratio, n1, cfg_base.n - n1, None, str(exc)))
    return points


# --- Block inter-arrival distribution ----------------------------------------


def gaussian_tail(x: float) -> float:
    """Standard normal upper-tail probability Q(x)."""
    return special.ndtr(-x)


@dataclass(frozen=True)
class InterArrivalParams:
    """Parameters of the pool's inter-arrival density.

    t_bar_delta: mean time for the pool to cross the AoW threshold
    (threshold many ring-plus-exterior-block legs). sigma2_delta: variance
    of that time, the summed variances of the exponential legs. eta:
    excess of the reduced-difficulty block rate over the high one.
    """

    t_bar_delta: float
    sigma2_delta: float
    eta: float

    @classmethod
    def from_network(cls, cfg: NetworkConfig) -> "InterArrivalParams":
        # the exterior leg is one block by anyone else, at the solved
        # aggregate rate; the nominal reduced-difficulty rate overstates it
        # whenever solo miners spend real time below the threshold
        m_ring = 2.0 ** cfg.d_s / cfg.n1
        m_ext = 1.0 / (cfg.n2 * fpi_rates(cfg).rho_solo)
        t_bar = cfg.delta * (m_ring + m_ext)
        sigma2 = cfg.delta * (m_ring**2 + m_ext**2)
        eta = cfg.n1 / 2.0 ** cfg.d2 - cfg.n1 / 2.0 ** cfg.d1
        return cls(t_bar, sigma2, eta)


def pool_interarrival_pdf(t, cfg: NetworkConfig):
    """Density of the time between the pool's own blocks.

    Mixture of a high-difficulty win before the AoW threshold is crossed
    and a reduced-difficulty win after, with the crossing time treated as
    Gaussian restricted to nonnegative values (so the density integrates
    to one exactly). The large exponential prefactor of the second branch
    is combined with the Gaussian tail in log space.
    """
    if cfg.delta < 30:
        warnings.warn(
            f"delta={cfg.delta} is small for the Gaussian crossing-time "
            "approximation (rule of thumb: >= 30)",
            RuntimeWarning,
            stacklevel=2,
        )
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    ia = InterArrivalParams.from_network(cfg)
    lb1 = cfg.n1 / 2.0 ** cfg.d1
    lb2 = cfg.n1 / 2.0 ** cfg.d2
    tbar, sig2, eta = ia.t_bar_delta, ia.sigma2_delta, ia.eta
    sig = math.sqrt(sig2)
    log_z = special.log_ndtr(tbar / sig)  # mass of the crossing time above zero

    p1 = lb1 * np.exp(-t * lb1) * np.exp(special.log_ndtr(-(t - tbar) / sig) - log_z)

    # log of the Gaussian-weighted exponential branch, with the truncated
    # lower limit subtracted: Phi(upper) - Phi(lower) done via log1p
    log_upper = special.log_ndtr((t - (tbar + eta * sig2)) / sig)
    log_lower = special.log_ndtr((0.0 - (tbar + eta * sig2)) / sig)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_diff = log_upper + np.log1p(-np.exp(np.minimum(log_lower - log_upper, 0.0)))
    log_diff = np.where(log_upper <= log_lower, -np.inf, log_diff)
    log_p2 = (
        math.log(lb2) - t * lb2 + eta * tbar + 0.5 * eta * eta * sig2 + log_diff - log_z
    )
    out = p1 + np.exp(log_p2)
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("inter-arrival density overflowed")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SoloRate:
    """Approximate solo inter-arrival rate plus the aggregate exterior rate."""

    rate: float
    lambda_o: float


def solo_interarrival_rate(cfg: NetworkConfig) -> SoloRate:
    """Approximate exponential rate of a solo miner's block inter-arrival.

    In the regime where the threshold is crossed long before a
    high-difficulty win, a solo miner effectively mines at the reduced
    difficulty. Also solves the coupled rates to expose the aggregate
    exterior rate used for the all-solo distribution check.
    """
    crossing = cfg.delta * (2.0 ** cfg.d_s + 2.0 ** cfg.d1 / (cfg.n - 1))
    if crossing >= 0.1 * 2.0 ** cfg.d1:
        warnings.warn(
            "threshold-crossing time is not small against the high-difficulty "
            "block time; the reduced-difficulty approximation is suspect",
            RuntimeWarning,
            stacklevel=2,
        )
    sol = fpi_rates(cfg)
    return SoloRate(rate=1.0 / 2.0 ** cfg.d2, lambda_o=cfg.n2 * sol.rho_solo)
