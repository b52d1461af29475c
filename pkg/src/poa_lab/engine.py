"""Event-driven Monte Carlo simulation of the mining network.

One pool entity (power n1) plus n2 unit-power solo entities race for each
block. Event times are sampled from exponential distributions rather than
computed by hashing; the hash-level protocol lives in
:mod:`poa_lab.protocol` and is exercised there at toy difficulties.

Within a round an entity may mine one effective age ring, which bumps its
AoW immediately and can drop its block difficulty mid-round. The winning
block event ends the round; the winner's AoW resets and everyone's
per-height ring flag clears. Per-entity RNG streams are derived from
(seed, entity id), so results do not depend on sampling order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analytics import CtmcParams, NetworkConfig, SteadyState, fpi_rates

_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    n1: int
    n2: int
    d1: float
    d2: float
    d_s: float
    delta: int
    blocks: int
    seed: int
    mode: str = "poa"  # "poa" or "pow"
    pow_difficulty: Optional[float] = None  # defaults to d1 in pow mode
    warmup: Optional[int] = None  # rounds excluded from rate windows; default 10*delta
    solo_agg_threshold: int = 1000
    agg_sources: int = 64

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.n1 < 1 or self.n2 < 0:
            raise ValueError("need n1 >= 1 and n2 >= 0")
        if self.mode not in ("poa", "pow"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if not (self.d1 > self.d2 > self.d_s):
            raise ValueError("difficulty exponents must satisfy d1 > d2 > d_s")

    @property
    def warmup_rounds(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return min(10 * self.delta, self.blocks // 2)


@dataclass
class EntityState:
    id: int
    power: float
    aow: int = 0
    ring_done: bool = False
    entity_kind: str = "solo"  # "pool" or "solo"


@dataclass
class SimReport:
    mode: str
    blocks: int
    seed: int
    virtual_time: float
    measured_time: float
    warmup_rounds: int
    block_counts: np.ndarray
    ring_counts: np.ndarray
    rho_pool: float
    rho_solo: float
    rho_total: float
    pool_gaps: np.ndarray
    solo_gaps: np.ndarray
    solo_aggregated: bool = False

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "blocks": self.blocks,
            "seed": self.seed,
            "virtual_time": self.virtual_time,
            "measured_time": self.measured_time,
            "warmup_rounds": self.warmup_rounds,
            "rho_pool": self.rho_pool,
            "rho_solo": self.rho_solo,
            "rho_total": self.rho_total,
            "block_counts": [int(c) for c in self.block_counts],
            "ring_counts": [int(c) for c in self.ring_counts],
            "solo_aggregated": self.solo_aggregated,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def write_samples_csv(self, path):
        """Two-column inter-arrival samples: entity_kind, gap."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["entity_kind", "gap"])
            for gap in self.pool_gaps:
                writer.writerow(["pool", f"{gap:.17g}"])
            for gap in self.solo_gaps:
                writer.writerow(["solo", f"{gap:.17g}"])


@dataclass
class RoundOutcome:
    winner: int
    duration: float
    ringed: np.ndarray  # per-entity effective-ring indicator for this round


class _EntityStreams:
    """Per-entity exponential variates, pre-drawn in chunks.

    Entity i's column comes from a generator seeded with (seed, i), so the
    draws an entity sees are independent of how other entities are handled.
    """

    def __init__(self, seed: int, n: int, draws_per_round: int = 3):
        self._gens = [
            np.random.default_rng(np.random.SeedSequence(entropy=(seed, i)))
            for i in range(n)
        ]
        self._per_round = draws_per_round
        self._buf = np.empty((_CHUNK, draws_per_round, n))
        self._pos = _CHUNK

    def next_round(self) -> np.ndarray:
        if self._pos >= _CHUNK:
            for i, gen in enumerate(self._gens):
                self._buf[:, :, i] = gen.standard_exponential((_CHUNK, self._per_round))
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row


class RoundEngine:
    """Sequential round-by-round simulation of one network."""

    def __init__(self, cfg: SimConfig, exterior_rate: Optional[float] = None):
        self.cfg = cfg
        self.solo_aggregated = cfg.n2 > cfg.solo_agg_threshold
        if self.solo_aggregated:
            # zero-dynamics Poisson super-sources standing in for the solo
            # population; their per-source rate comes from the coupled-rate
            # solution unless supplied explicitly
            if exterior_rate is None:
                net = NetworkConfig(
                    cfg.n1 + cfg.n2, cfg.n1, cfg.d1, cfg.d2, cfg.d_s, cfg.delta
                )
                exterior_rate = cfg.n2 * fpi_rates(net).rho_solo
            n_src = min(cfg.agg_sources, cfg.n2)
            self.power = np.concatenate([[float(cfg.n1)], np.full(n_src, cfg.n2 / n_src)])
            self._source_rate = np.concatenate(
                [[0.0], np.full(n_src, exterior_rate / n_src)]
            )
            self._dynamic = np.zeros(1 + n_src, dtype=bool)
            self._dynamic[0] = True
        else:
            self.power = np.concatenate([[float(cfg.n1)], np.ones(cfg.n2)])
            self._source_rate = None
            self._dynamic = np.ones(1 + cfg.n2, dtype=bool)
        n = len(self.power)
        self.n_entities = n
        self.aow = np.zeros(n, dtype=np.int64)
        self._streams = _EntityStreams(cfg.seed, n)
        if cfg.mode == "pow":
            d = cfg.pow_difficulty if cfg.pow_difficulty is not None else cfg.d1
            self._pow_rate = self.power / 2.0**d
        else:
            self._ring_rate = np.where(self._dynamic, self.power / 2.0 ** cfg.d_s, np.inf)
            self._rate_lo = self.power / 2.0 ** cfg.d1
            self._rate_hi = self.power / 2.0 ** cfg.d2

    def next_round(self) -> RoundOutcome:
        if self.cfg.mode == "pow":
            return self._next_round_pow()
        return self._next_round_poa()

    def _next_round_pow(self) -> RoundOutcome:
        e = self._streams.next_round()
        times = e[0] / self._pow_rate
        w = int(np.argmin(times))
        return RoundOutcome(w, float(times[w]), np.zeros(self.n_entities, dtype=bool))

    def _next_round_poa(self) -> RoundOutcome:
        cfg = self.cfg
        e0, e1, e2 = self._streams.next_round()
        t_ring = e0 / self._ring_rate
        over = self.aow >= cfg.delta
        over_next = self.aow + 1 >= cfg.delta
        rate_now = np.where(over, self._rate_hi, self._rate_lo)
        rate_after = np.where(over_next, self._rate_hi, self._rate_lo)
        if self.solo_aggregated:
            rate_now = np.where(self._dynamic, rate_now, self._source_rate)
            rate_after = np.where(self._dynamic, rate_after, self._source_rate)
        b0 = e1 / rate_now
        # an entity's block clock restarts at its ring event when the rate
        # changes; when it does not change, memorylessness keeps b0 exact
        switches = rate_after > rate_now
        block_time = np.where(
            b0 < t_ring, b0, np.where(switches, t_ring + e2 / rate_after, b0)
        )
        w = int(np.argmin(block_time))
        duration = float(block_time[w])
        ringed = (t_ring < duration) & self._dynamic
        self.aow[ringed] += 1
        self.aow[w] = 0
        return RoundOutcome(w, duration, ringed)


def run_sim(cfg: SimConfig, exterior_rate: Optional[float] = None) -> SimReport:
    """Simulate ``cfg.blocks`` rounds; deterministic for a fixed seed.

    Empirical rates and inter-arrival samples come from the rounds after
    the warm-up window (every entity starts at AoW zero, which is not the
    stationary regime).
    """
    engine = RoundEngine(cfg, exterior_rate)
    n = engine.n_entities
    warmup = cfg.warmup_rounds
    block_counts = np.zeros(n, dtype=np.int64)
    ring_counts = np.zeros(n, dtype=np.int64)
    m_counts = np.zeros(n, dtype=np.int64)
    t_total = 0.0
    m_time = 0.0
    pool_gap = solo_gap = 0.0
    pool_open = solo_open = False
    pool_gaps: list[float] = []
    solo_gaps: list[float] = []
    for r in range(cfg.blocks):
        out = engine.next_round()
        block_counts[out.winner] += 1
        ring_counts += out.ringed
        t_total += out.duration
        if r < warmup:
            continue
        m_counts[out.winner] += 1
        m_time += out.duration
        pool_gap += out.duration
        solo_gap += out.duration
        if out.winner == 0:
            if pool_open:
                pool_gaps.append(pool_gap)
            pool_gap = 0.0
            pool_open = True
        else:
            if solo_open:
                solo_gaps.append(solo_gap)
            solo_gap = 0.0
            solo_open = True
    rho_pool = m_counts[0] / m_time
    rho_solo = m_counts[1:].sum() / m_time / cfg.n2 if cfg.n2 else 0.0
    return SimReport(
        mode=cfg.mode,
        blocks=cfg.blocks,
        seed=cfg.seed,
        virtual_time=t_total,
        measured_time=m_time,
        warmup_rounds=warmup,
        block_counts=block_counts,
        ring_counts=ring_counts,
        rho_pool=float(rho_pool),
        rho_solo=float(rho_solo),
        rho_total=float(m_counts.sum() / m_time),
        pool_gaps=np.asarray(pool_gaps),
        solo_gaps=np.asarray(solo_gaps),
        solo_aggregated=engine.solo_aggregated,
    )


# --- Decoupled single-miner mode ---------------------------------------------


@dataclass
class Occupancy:
    """Time-fraction occupancy of the single-miner chain states."""

    p0: float
    p: np.ndarray  # AoW state i, ring pending, i = 1..k
    p_bar: np.ndarray  # AoW state i, ring done, i = 1..k
    events: int


def run_decoupled(params: CtmcParams, events: int, seed: int, k: int = 512) -> Occupancy:
    """Simulate one miner against a single Poisson exterior block source.

    This isolates the exterior-aggregation approximation from the chain
    math: occupancy fractions here should match the steady state exactly
    (up to sampling noise).
    """
    rng = np.random.default_rng(seed)
    exp = rng.standard_exponential(3 * events)
    uni = rng.random(events)
    t0 = 0.0
    t_i = np.zeros(k + 1)
    t_bar = np.zeros(k + 1)
    aow = 0
    ringed = False
    pos = 0
    for step in range(events):
        lb = params.block_rate(aow)
        if ringed:
            total = lb + params.lambda_o
            hold = exp[pos] / total
            pos += 1
            t_bar[min(aow, k)] += hold
            if uni[step] * total < lb:
                aow, ringed = 0, False
            else:
                ringed = False
        else:
            total = lb + params.lambda_s + params.lambda_o
            hold = exp[pos] / total
            pos += 1
            if aow == 0:
                t0 += hold
            else:
                t_i[min(aow, k)] += hold
            u = uni[step] * total
            if u < lb:
                aow = 0
            elif u < lb + params.lambda_s:
                aow += 1
                ringed = True
            # exterior block: same AoW, new height, still no ring
    total_time = t0 + t_i.sum() + t_bar.sum()
    return Occupancy(t0 / total_time, t_i[1:] / total_time, t_bar[1:] / total_time, events)


# --- Sample statistics --------------------------------------------------------


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    passed: bool


def ks_statistic(samples: np.ndarray, rate: float) -> KsResult:
    """One-sample Kolmogorov-Smirnov test against an exponential CDF.

    Pass/fail uses the asymptotic 5% critical value 1.36/sqrt(n). Input
    must be sorted ascending.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 100:
        raise ValueError("need at least 100 samples")
    if np.any(np.diff(samples) < 0):
        raise ValueError("samples must be sorted ascending")
    n = len(samples)
    cdf = 1.0 - np.exp(-rate * samples)
    d_plus = (np.arange(1, n + 1) / n - cdf).max()
    d_minus = (cdf - np.arange(0, n) / n).max()
    stat = float(max(d_plus, d_minus))
    crit = 1.36 / math.sqrt(n)
    return KsResult(stat, crit, stat < crit)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray  # integrates to 1 over the binned range

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def histogram(samples: np.ndarray, bin_count: int) -> Histogram:
    """Equal-width histogram over [0, max sample], density-normalised."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty samples")
    if bin_count < 2:
        raise ValueError("bin_count must be >= 2")
    edges = np.linspace(0.0, samples.max(), bin_count + 1)
    counts, _ = np.histogram(samples, bins=edges)
    width = edges[1] - edges[0]
    density = counts / (counts.sum() * width)
    return Histogram(edges, counts, density)
