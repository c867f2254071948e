"""Figure rendering for the CLI report paths (PNG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    ("wavenumber", "gcse"): dict(color="tab:blue", marker="o"),
    ("wavenumber", "omp"): dict(color="tab:blue", marker="s", linestyle="--"),
    ("angular", "gcse"): dict(color="tab:red", marker="o"),
    ("angular", "omp"): dict(color="tab:red", marker="s", linestyle="--"),
}


def save_nmse_figure(summary_rows, path):
    """Median NMSE vs SNR, one curve per (domain, estimator)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    curves = {}
    for row in summary_rows:
        curves.setdefault((row["domain"], row["estimator"]), []).append(
            (row["snr_db"], row["median_nmse"])
        )
    for key in sorted(curves):
        pts = sorted(curves[key])
        snrs = [p[0] for p in pts]
        vals = [p[1] for p in pts]
        ax.semilogy(snrs, vals, label=f"{key[0]} / {key[1]}", **_STYLE.get(key, {}))
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("median NMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence_figure(records, path):
    """Median residual trace per (domain, estimator), normalized to ||y||."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    groups = {}
    for rec in records:
        if rec.residual_trace:
            trace = np.asarray(rec.residual_trace)
            scale = trace[0] if trace[0] > 0 else 1.0
            groups.setdefault((rec.domain, rec.estimator), []).append(trace / scale)
    for key in sorted(groups):
        traces = groups[key]
        depth = max(len(t) for t in traces)
        padded = np.vstack(
            [np.pad(t, (0, depth - len(t)), mode="edge") for t in traces]
        )
        median = np.median(padded, axis=0)
        ax.semilogy(np.arange(depth), median, label=f"{key[0]} / {key[1]}",
                    **_STYLE.get(key, {}))
    ax.set_xlabel("iteration")
    ax.set_ylabel("median residual norm (relative)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _power_grid(rows, domain):
    entries = [(ix, iy, p) for d, ix, iy, p in rows if d == domain]
    xs = sorted({e[0] for e in entries})
    ys = sorted({e[1] for e in entries})
    grid = np.full((len(ys), len(xs)), np.nan)
    xpos = {x: i for i, x in enumerate(xs)}
    ypos = {y: i for i, y in enumerate(ys)}
    for ix, iy, p in entries:
        grid[ypos[iy], xpos[ix]] = p
    return xs, ys, grid


def save_leakage_figure(report, path):
    """Side-by-side per-index power maps, angular vs wavenumber domain."""
    seed = sorted(report.power_tables)[0]
    rows = report.power_tables[seed]
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    for ax, domain in zip(axes, ("angular", "wavenumber")):
        xs, ys, grid = _power_grid(rows, domain)
        floor = np.nanmax(grid) * 1e-8 + np.finfo(float).tiny
        image = ax.imshow(
            np.log10(np.maximum(grid, floor)),
            origin="lower",
            extent=(min(xs) - 0.5, max(xs) + 0.5, min(ys) - 0.5, max(ys) + 0.5),
            cmap="inferno",
            interpolation="nearest",
        )
        ax.set_title(f"{domain} power (log10), seed {seed}")
        ax.set_xlabel("index x")
        ax.set_ylabel("index y")
        fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_fraction_figure(report, path):
    """Captured-power fractions per seed for both domains."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    seeds = [row["seed"] for row in report.fraction_rows]
    ax.plot(seeds, [r["wavenumber_fraction"] for r in report.fraction_rows],
            "o-", color="tab:blue", label="wavenumber")
    ax.plot(seeds, [r["angular_fraction"] for r in report.fraction_rows],
            "s--", color="tab:red", label="angular")
    ax.set_xlabel("seed")
    ax.set_ylabel(f"power fraction in top {report.top_k} coefficients")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_lattice_heatmap(index_set, values, path, title="wavenumber power"):
    """Heatmap of nonnegative per-index values over the wavenumber lattice."""
    idx = index_set.as_array()
    rows = [("wavenumber", int(a), int(b), float(v))
            for (a, b), v in zip(idx, values)]
    xs, ys, grid = _power_grid(rows, "wavenumber")
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    image = ax.imshow(
        grid,
        origin="lower",
        extent=(min(xs) - 0.5, max(xs) + 0.5, min(ys) - 0.5, max(ys) + 0.5),
        cmap="viridis",
        interpolation="nearest",
    )
    ax.set_title(title)
    ax.set_xlabel("lx")
    ax.set_ylabel("ly")
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
