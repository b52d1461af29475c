"""Experiment orchestration: config validation, runs, and file outputs.

An experiment spec is a JSON document selecting one of four kinds:

  gap-sweep           relative-gain gap G over a pool/solo ratio grid
  throughput-vs-ratio coupled-rate solutions vs simulated rates
  interarrival-hist   inter-arrival histograms plus analytic curves
  pow-vs-poa          normalized pool and per-member rates, both modes

Every run writes delimited CSV output, rendered figures, and a manifest
echoing the full spec (defaulted fields marked) so each output row's
parameters are recoverable from the manifest alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import figures
from .analytics import (
    NetworkConfig,
    fpi_rates,
    gain_gap_curve,
    pool_interarrival_pdf,
    solo_interarrival_rate,
)
from .engine import SimConfig, histogram, run_sim

KINDS = ("gap-sweep", "throughput-vs-ratio", "interarrival-hist", "pow-vs-poa")

_KNOWN_KEYS = {
    "name", "kind", "n", "n1", "d1", "d2", "d_s", "delta", "delta_grid",
    "ratios", "blocks", "seeds", "epsilon", "warmup", "bins", "out_dir",
}

_DEFAULTS = {
    "epsilon": 1e-12,
    "warmup": None,  # resolved to 10*delta by the engine
    "bins": 60,
    "seeds": [1],
    "blocks": 100_000,
    "delta_grid": None,
    "n1": None,
    "ratios": None,
    "out_dir": ".",
}


class ConfigError(ValueError):
    """Invalid experiment configuration; carries one diagnostic per problem."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    n: int
    d1: float
    d2: float
    d_s: float
    delta: int
    ratios: Optional[list]
    n1: Optional[int]
    delta_grid: Optional[list]
    blocks: int
    seeds: list
    epsilon: float
    warmup: Optional[int]
    bins: int
    out_dir: str
    defaulted: list = field(default_factory=list)

    def manifest_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n": self.n,
            "d1": self.d1,
            "d2": self.d2,
            "d_s": self.d_s,
            "delta": self.delta,
            "ratios": self.ratios,
            "n1": self.n1,
            "delta_grid": self.delta_grid,
            "blocks": self.blocks,
            "seeds": self.seeds,
            "epsilon": self.epsilon,
            "warmup": self.warmup,
            "bins": self.bins,
            "out_dir": self.out_dir,
            "defaulted_fields": sorted(self.defaulted),
        }


def validate_spec(raw: str) -> ExperimentSpec:
    """Parse and validate a JSON experiment config, collecting all problems."""
    problems = []
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be an object"])

    for key in sorted(set(doc) - _KNOWN_KEYS):
        problems.append(f"unknown key {key!r}")

    defaulted = [k for k in _DEFAULTS if k not in doc]
    merged = {**_DEFAULTS, **doc}

    def need(key, types, check=None, msg=None):
        val = merged.get(key)
        if val is None:
            problems.append(f"missing required field {key!r}")
            return None
        if not isinstance(val, types) or isinstance(val, bool):
            problems.append(f"{key!r} has wrong type {type(val).__name__}")
            return None
        if check is not None and not check(val):
            problems.append(msg or f"{key!r} invalid")
            return None
        return val

    name = need("name", str)
    kind = need("kind", str, lambda k: k in KINDS, f"'kind' must be one of {KINDS}")
    n = need("n", int, lambda v: v >= 2, "'n' must be at least 2")
    d1 = need("d1", (int, float))
    d2 = need("d2", (int, float))
    d_s = need("d_s", (int, float))
    delta = need("delta", int, lambda v: v >= 1, "'delta' must be >= 1")
    blocks = need("blocks", int, lambda v: v >= 1, "'blocks' must be >= 1")
    epsilon = need("epsilon", (int, float), lambda v: v > 0, "'epsilon' must be positive")
    bins = need("bins", int, lambda v: v >= 2, "'bins' must be >= 2")

    if d1 is not None and d2 is not None and d1 <= d2:
        problems.append("d1 must exceed d2")
    if d2 is not None and d_s is not None and d2 <= d_s:
        problems.append("d2 must exceed d_s")

    seeds = merged.get("seeds")
    if not (isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds)):
        problems.append("'seeds' must be a non-empty list of integers")

    warmup = merged.get("warmup")
    if warmup is not None and (not isinstance(warmup, int) or warmup < 0):
        problems.append("'warmup' must be a nonnegative integer or null")

    ratios = merged.get("ratios")
    if ratios is not None and not (
        isinstance(ratios, list)
        and all(isinstance(r, (int, float)) and r > 0 for r in ratios)
    ):
        problems.append("'ratios' must be a list of positive numbers")

    n1 = merged.get("n1")
    if n1 is not None and (not isinstance(n1, int) or n1 < 1):
        problems.append("'n1' must be a positive integer")

    delta_grid = merged.get("delta_grid")
    if delta_grid is not None and not (
        isinstance(delta_grid, list)
        and all(isinstance(d, int) and d >= 1 for d in delta_grid)
    ):
        problems.append("'delta_grid' must be a list of positive integers")

    if kind in ("gap-sweep", "throughput-vs-ratio", "pow-vs-poa") and not ratios:
        problems.append(f"kind {kind!r} requires a non-empty 'ratios' grid")
    if kind == "interarrival-hist" and n1 is None:
        problems.append("kind 'interarrival-hist' requires 'n1'")
    if n is not None and n1 is not None and n1 >= n:
        problems.append("'n1' must be smaller than 'n'")

    if problems:
        raise ConfigError(problems)

    return ExperimentSpec(
        name=name, kind=kind, n=n, d1=d1, d2=d2, d_s=d_s, delta=delta,
        ratios=ratios, n1=n1, delta_grid=delta_grid, blocks=blocks,
        seeds=list(seeds), epsilon=float(epsilon), warmup=warmup, bins=bins,
        out_dir=str(merged["out_dir"]), defaulted=defaulted,
    )


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _network(spec: ExperimentSpec, n1: int, delta: Optional[int] = None) -> NetworkConfig:
    return NetworkConfig(
        spec.n, n1, spec.d1, spec.d2, spec.d_s,
        spec.delta if delta is None else delta, spec.epsilon,
    )


def _sim_config(spec: ExperimentSpec, n1: int, seed: int, mode="poa", pow_difficulty=None):
    return SimConfig(
        n1=n1, n2=spec.n - n1, d1=spec.d1, d2=spec.d2, d_s=spec.d_s,
        delta=spec.delta, blocks=spec.blocks, seed=seed, mode=mode,
        pow_difficulty=pow_difficulty, warmup=spec.warmup,
    )


def _pool_sizes(spec: ExperimentSpec) -> list[int]:
    sizes = []
    for r in spec.ratios:
        n1 = max(1, round(spec.n * r / (1.0 + r)))
        sizes.append(min(n1, spec.n - 1))
    return sizes


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    out = Path(spec.out_dir) / spec.name
    out.mkdir(parents=True, exist_ok=True)
    runner = {
        "gap-sweep": _run_gap_sweep,
        "throughput-vs-ratio": _run_throughput,
        "interarrival-hist": _run_interarrival,
        "pow-vs-poa": _run_pow_vs_poa,
    }[spec.kind]
    paths = runner(spec, out)
    manifest = out / "manifest.json"
    with open(manifest, "w") as fh:
        json.dump(spec.manifest_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(manifest)
    return paths


def _run_gap_sweep(spec: ExperimentSpec, out: Path) -> list[Path]:
    deltas = spec.delta_grid or [spec.delta]
    rows = []
    series = {}
    for d in deltas:
        base = _network(spec, 1, delta=d)
        points = gain_gap_curve(base, spec.ratios)
        series[d] = points
        for pt in points:
            rows.append([pt.ratio, d, pt.n1, pt.n2,
                         pt.g if pt.g is not None else "", pt.error or ""])
    csv_path = _write_csv(out / "gap_sweep.csv",
                          ["ratio", "delta", "n1", "n2", "g", "error"], rows)
    fig_path = figures.gap_sweep(series, out / "gap_sweep.png")
    return [csv_path, fig_path]


def _run_throughput(spec: ExperimentSpec, out: Path) -> list[Path]:
    rows = []
    for ratio, n1 in zip(spec.ratios, _pool_sizes(spec)):
        sol = fpi_rates(_network(spec, n1))
        sims = [run_sim(_sim_config(spec, n1, seed)) for seed in spec.seeds]
        rows.append([
            ratio, n1, spec.n - n1,
            sol.rho_pool, sol.rho_solo, sol.rho_total,
            float(np.mean([s.rho_pool for s in sims])),
            float(np.mean([s.rho_solo for s in sims])),
            float(np.mean([s.rho_total for s in sims])),
        ])
    header = ["ratio", "n1", "n2", "rho_pool_fpi", "rho_solo_fpi", "rho_total_fpi",
              "rho_pool_sim", "rho_solo_sim", "rho_total_sim"]
    csv_path = _write_csv(out / "throughput.csv", header, rows)
    fig_path = figures.throughput(header, rows, out / "throughput.png")
    return [csv_path, fig_path]


def _run_interarrival(spec: ExperimentSpec, out: Path) -> list[Path]:
    net = _network(spec, spec.n1)
    solo = solo_interarrival_rate(net)
    report = run_sim(_sim_config(spec, spec.n1, spec.seeds[0]))
    paths = [out / "samples.csv"]
    report.write_samples_csv(paths[0])

    pool_hist = histogram(report.pool_gaps, spec.bins)
    solo_hist = histogram(report.solo_gaps, spec.bins)
    paths.append(_write_csv(
        out / "pool_hist.csv", ["bin_left", "bin_right", "count", "density"],
        [[a, b, int(c), dens] for a, b, c, dens in zip(
            pool_hist.edges[:-1], pool_hist.edges[1:], pool_hist.counts, pool_hist.density)],
    ))
    paths.append(_write_csv(
        out / "solo_hist.csv", ["bin_left", "bin_right", "count", "density"],
        [[a, b, int(c), dens] for a, b, c, dens in zip(
            solo_hist.edges[:-1], solo_hist.edges[1:], solo_hist.counts, solo_hist.density)],
    ))

    t_pool = np.linspace(0.0, pool_hist.edges[-1], 400)
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore", RuntimeWarning)
        pdf_vals = pool_interarrival_pdf(t_pool, net)
    paths.append(_write_csv(out / "pool_pdf_curve.csv", ["t", "density"],
                            list(zip(t_pool, pdf_vals))))
    t_solo = np.linspace(0.0, solo_hist.edges[-1], 400)
    exp_vals = solo.lambda_o * np.exp(-solo.lambda_o * t_solo)
    paths.append(_write_csv(out / "solo_exp_curve.csv", ["t", "density"],
                            list(zip(t_solo, exp_vals))))
    paths.append(figures.interarrival(
        pool_hist, t_pool, pdf_vals, solo_hist, t_solo, exp_vals,
        out / "interarrival.png",
    ))
    return paths


def _run_pow_vs_poa(spec: ExperimentSpec, out: Path) -> list[Path]:
    rows = []
    for ratio, n1 in zip(spec.ratios, _pool_sizes(spec)):
        sol = fpi_rates(_network(spec, n1))
        # matched single difficulty so both modes share total throughput
        matched_d = math.log2(spec.n / sol.rho_total)
        poa, pow_ = [], []
        for seed in spec.seeds:
            rp = run_sim(_sim_config(spec, n1, seed)).rho_pool
            rw = run_sim(
                _sim_config(spec, n1, seed, mode="pow", pow_difficulty=matched_d)
            ).rho_pool
            poa.append(rp / sol.rho_total)
            pow_.append(rw / sol.rho_total)
        poa, pow_ = np.asarray(poa), np.asarray(pow_)
        rows.append([
            ratio, n1, matched_d,
            float(poa.mean()), float(poa.std(ddof=1)) if len(poa) > 1 else 0.0,
            float(pow_.mean()), float(pow_.std(ddof=1)) if len(pow_) > 1 else 0.0,
            float(poa.mean() / n1), float(pow_.mean() / n1),
        ])
    header = ["ratio", "n1", "matched_difficulty",
              "pool_norm_poa_mean", "pool_norm_poa_std",
              "pool_norm_pow_mean", "pool_norm_pow_std",
              "member_norm_poa", "member_norm_pow"]
    csv_path = _write_csv(out / "pow_vs_poa.csv", header, rows)
    fig_path = figures.pow_vs_poa(header, rows, out / "pow_vs_poa.png")
    return [csv_path, fig_path]
