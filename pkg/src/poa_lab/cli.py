"""Command-line front end.

    poa-lab run <config> [--out DIR] [--seeds S1,S2,...] [--blocks N]
    poa-lab solve ...      coupled-rate solution as key=value lines
    poa-lab simulate ...   one simulation, report printed as JSON

Exit codes: 0 success, 1 configuration error, 2 numeric/convergence error.
"""

from __future__ import annotations

import json
import sys

import click

from .analytics import NetworkConfig, NonConvergenceError, fpi_rates
from .engine import SimConfig, run_sim
from .experiments import ConfigError, run_experiment, validate_spec

EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Age-of-work mining lab: rate solver, simulator, and experiments."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (overrides the config).")
@click.option("--seeds", default=None, help="Comma-separated seed list override.")
@click.option("--blocks", type=int, default=None, help="Block-count override.")
def run(config_path, out_dir, seeds, blocks):
    """Run the experiment described by a JSON config file."""
    with open(config_path) as fh:
        raw = fh.read()
    try:
        spec = validate_spec(raw)
    except ConfigError as exc:
        for diag in exc.diagnostics:
            click.echo(f"config error: {diag}", err=True)
        sys.exit(EXIT_CONFIG)
    if out_dir is not None:
        spec.out_dir = out_dir
    if seeds is not None:
        try:
            spec.seeds = [int(s) for s in seeds.split(",") if s]
        except ValueError:
            _fail(EXIT_CONFIG, f"bad --seeds value {seeds!r}")
        if not spec.seeds:
            _fail(EXIT_CONFIG, "empty --seeds list")
    if blocks is not None:
        if blocks < 1:
            _fail(EXIT_CONFIG, "--blocks must be >= 1")
        spec.blocks = blocks
    try:
        paths = run_experiment(spec)
    except NonConvergenceError as exc:
        _fail(EXIT_NUMERIC, f"experiment {spec.name!r}: {exc}")
    except ArithmeticError as exc:
        _fail(EXIT_NUMERIC, f"experiment {spec.name!r}: {exc}")
    for path in paths:
        click.echo(str(path))


def _network_options(fn):
    for deco in reversed([
        click.option("--n", type=int, required=True, help="Total miners."),
        click.option("--n1", type=int, required=True, help="Pool size."),
        click.option("--d1", type=float, required=True, help="High block difficulty."),
        click.option("--d2", type=float, required=True, help="Reduced block difficulty."),
        click.option("--ds", type=float, required=True, help="Age-ring difficulty."),
        click.option("--delta", type=int, required=True, help="AoW threshold."),
    ]):
        fn = deco(fn)
    return fn


@main.command()
@_network_options
@click.option("--epsilon", type=float, default=1e-12, show_default=True)
def solve(n, n1, d1, d2, ds, delta, epsilon):
    """Solve the coupled pool/solo block rates."""
    try:
        cfg = NetworkConfig(n, n1, d1, d2, ds, delta, epsilon)
    except ValueError as exc:
        _fail(EXIT_CONFIG, exc)
    try:
        sol = fpi_rates(cfg)
    except NonConvergenceError as exc:
        _fail(EXIT_NUMERIC, exc)
    for key in ("rho_pool", "rho_solo", "rho_total", "f_poa", "f_pow", "g", "residual"):
        click.echo(f"{key}={getattr(sol, key):.17g}")
    click.echo(f"iterations={sol.iterations}")


@main.command()
@_network_options
@click.option("--blocks", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--mode", type=click.Choice(["poa", "pow"]), default="poa",
              show_default=True)
@click.option("--pow-difficulty", type=float, default=None,
              help="Single difficulty for pow mode (defaults to d1).")
@click.option("--warmup", type=int, default=None,
              help="Warm-up rounds excluded from rates (default 10*delta).")
@click.option("--samples-out", type=click.Path(dir_okay=False), default=None,
              help="Also write inter-arrival samples to this CSV.")
def simulate(n, n1, d1, d2, ds, delta, blocks, seed, mode, pow_difficulty, warmup,
             samples_out):
    """Run one simulation and print its report as JSON."""
    try:
        cfg = SimConfig(
            n1=n1, n2=n - n1, d1=d1, d2=d2, d_s=ds, delta=delta, blocks=blocks,
            seed=seed, mode=mode, pow_difficulty=pow_difficulty, warmup=warmup,
        )
    except ValueError as exc:
        _fail(EXIT_CONFIG, exc)
    try:
        report = run_sim(cfg)
    except (NonConvergenceError, ArithmeticError) as exc:
        _fail(EXIT_NUMERIC, exc)
    if samples_out is not None:
        report.write_samples_csv(samples_out)
    click.echo(json.dumps(report.to_json_dict(), indent=2))


if __name__ == "__main__":
    main()
