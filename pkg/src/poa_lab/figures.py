"""Figure rendering for experiment outputs (one PNG per report)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def gap_sweep(series, path):
    """G vs pool/solo ratio, one curve per threshold value."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for delta, points in sorted(series.items()):
        xs = [p.ratio for p in points if p.g is not None]
        ys = [p.g for p in points if p.g is not None]
        ax.plot(xs, ys, marker="o", ms=3, label=f"threshold {delta}")
    ax.set_xscale("log")
    ax.set_xlabel("pool/solo power ratio")
    ax.set_ylabel("relative-gain gap G")
    ax.axhline(1.0, color="gray", lw=0.6, ls="--")
    ax.legend()
    return _save(fig, path)


def throughput(header, rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    idx = {h: i for i, h in enumerate(header)}
    xs = [r[idx["ratio"]] for r in rows]
    for key, style in (("rho_total", "-"), ("rho_pool", "--"), ("rho_solo", ":")):
        ax.plot(xs, [r[idx[key + "_fpi"]] for r in rows], style, label=f"{key} (solver)")
        ax.plot(xs, [r[idx[key + "_sim"]] for r in rows], "o", ms=4,
                label=f"{key} (sim)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("pool/solo power ratio")
    ax.set_ylabel("block rate")
    ax.legend(fontsize=7)
    return _save(fig, path)


def interarrival(pool_hist, t_pool, pdf_vals, solo_hist, t_solo, exp_vals, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.bar(pool_hist.centers, pool_hist.density,
            width=pool_hist.edges[1] - pool_hist.edges[0], alpha=0.5, label="simulated")
    ax1.plot(t_pool, pdf_vals, "r-", label="analytic")
    ax1.set_title("pool inter-arrival")
    ax1.set_xlabel("time")
    ax1.legend()
    ax2.bar(solo_hist.centers, solo_hist.density,
            width=solo_hist.edges[1] - solo_hist.edges[0], alpha=0.5, label="simulated")
    ax2.plot(t_solo, exp_vals, "r-", label="exponential")
    ax2.set_title("all-solo inter-arrival")
    ax2.set_xlabel("time")
    ax2.legend()
    return _save(fig, path)


def pow_vs_poa(header, rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    idx = {h: i for i, h in enumerate(header)}
    xs = [r[idx["ratio"]] for r in rows]
    for mode in ("poa", "pow"):
        ax.errorbar(
            xs,
            [r[idx[f"pool_norm_{mode}_mean"]] for r in rows],
            yerr=[r[idx[f"pool_norm_{mode}_std"]] for r in rows],
            marker="o", ms=4, capsize=3, label=f"pool ({mode})",
        )
    ax.set_xscale("log")
    ax.set_xlabel("pool power ratio")
    ax.set_ylabel("normalized pool block rate")
    ax.legend()
    return _save(fig, path)
