"""Command-line harness: simulate, estimate, sweep, analyze-leakage."""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .array_geometry import build_index_set
from .channel_model import integrate_variances
from .dictionaries import wavenumber_dictionary
from .harness import (
    Scenario,
    ScenarioSizeError,
    _derive_seed,
    _TAG_CHANNEL,
    _TAG_PROFILE,
    _draw_realization,
    aggregate,
    analyze_leakage,
    load_scenario,
    preset,
    run_scenario,
    write_leakage_outputs,
    write_manifest,
    write_results_csv,
    write_summary_csv,
    write_traces_csv,
)
from . import plots


def _resolve_scenario(config, preset_name, seed, snr_db, domain, estimator) -> Scenario:
    scenario = load_scenario(config) if config else preset(preset_name)
    updates = {}
    if seed is not None:
        updates["master_seed"] = seed
    if snr_db:
        updates["snr_grid_db"] = tuple(float(s) for s in snr_db.split(","))
    if domain:
        updates["domain"] = domain
    if estimator:
        updates["estimators"] = (estimator,)
    return replace(scenario, **updates) if updates else scenario


def _scenario_options(fn):
    fn = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="JSON scenario config.")(fn)
    fn = click.option("--preset", "preset_name",
                      type=click.Choice(["desk", "paper"]), default="desk",
                      show_default=True, help="Built-in scenario (ignored with --config).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed override.")(fn)
    fn = click.option("--snr-db", default=None,
                      help="Comma-separated SNR grid in dB ('inf' allowed).")(fn)
    fn = click.option("--domain", type=click.Choice(["angular", "wavenumber", "both"]),
                      default=None, help="Domain override.")(fn)
    fn = click.option("--estimator", type=click.Choice(["gcse", "omp"]),
                      default=None, help="Restrict to one estimator.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default="results",
                      show_default=True, help="Output directory.")(fn)
    return fn


@click.group()
@click.version_option()
def main():
    """Wavenumber-domain channel simulation and sparse estimation."""


@main.command()
@_scenario_options
def sweep(config, preset_name, seed, snr_db, domain, estimator, out):
    """Run the full sweep and write results, summary, traces and figures."""
    scenario = _resolve_scenario(config, preset_name, seed, snr_db, domain, estimator)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        records = run_scenario(scenario)
    except ScenarioSizeError as err:
        raise click.ClickException(str(err))
    summary = aggregate(records)

    write_results_csv(records, outdir / "results.csv")
    write_summary_csv(summary, outdir / "summary.csv")
    write_traces_csv(records, outdir / "traces.csv")
    write_manifest(scenario, outdir / "manifest.json")
    figdir = outdir / "figures"
    figdir.mkdir(exist_ok=True)
    plots.save_nmse_figure(summary, figdir / "nmse_vs_snr.png")
    plots.save_convergence_figure(records, figdir / "convergence.png")

    click.echo(f"{len(records)} runs -> {outdir}")
    for row in summary:
        click.echo(
            f"  {row['domain']:>10} {row['estimator']:>5} @ "
            f"{row['snr_db']:>5} dB: median NMSE {row['median_nmse']:.3e} "
            f"({row['runs']} runs)"
        )


@main.command()
@_scenario_options
def estimate(config, preset_name, seed, snr_db, domain, estimator, out):
    """Run a single estimation cell and report NMSE and iterations."""
    scenario = _resolve_scenario(config, preset_name, seed, snr_db, domain, estimator)
    single_domain = scenario.domain if scenario.domain != "both" else "wavenumber"
    cell = replace(
        scenario,
        domain=single_domain,
        seeds=(scenario.seeds[0],),
        snr_grid_db=(scenario.snr_grid_db[0],),
        estimators=(scenario.estimators[0],) if estimator is None else scenario.estimators,
    )
    try:
        records = run_scenario(cell)
    except ScenarioSizeError as err:
        raise click.ClickException(str(err))
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_results_csv(records, outdir / "estimate_record.csv")
    write_traces_csv(records, outdir / "residual_trace.csv")
    for rec in records:
        click.echo(
            f"{rec.domain}/{rec.estimator} seed {rec.seed} @ {rec.snr_db} dB: "
            f"NMSE {rec.nmse:.3e} in {rec.iterations} iterations "
            f"({rec.wall_time * 1e3:.1f} ms)"
        )


@main.command()
@_scenario_options
def simulate(config, preset_name, seed, snr_db, domain, estimator, out):
    """Draw one channel and dump its variance profile and coefficients."""
    scenario = _resolve_scenario(config, preset_name, seed, snr_db, domain, estimator)
    cfg = scenario.array
    index_set = build_index_set(cfg)
    wn_dict = wavenumber_dictionary(cfg, index_set)
    profile = integrate_variances(
        scenario.spectrum, index_set, scenario.mc_samples,
        _derive_seed(scenario.master_seed, _TAG_PROFILE),
    )
    realization = _draw_realization(
        scenario, profile, index_set, wn_dict, scenario.seeds[0]
    )

    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    profile.write_csv(outdir / "variance_profile.csv")
    with open(outdir / "channel_wavenumber.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lx", "ly", "re", "im"])
        for idx, c in zip(index_set, realization.wavenumber_coeffs):
            writer.writerow([idx.lx, idx.ly, repr(float(c.real)), repr(float(c.imag))])
    with open(outdir / "channel_spatial.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_x", "n_y", "re", "im"])
        for flat, value in enumerate(realization.spatial):
            writer.writerow([flat // cfg.n_y, flat % cfg.n_y,
                             repr(float(value.real)), repr(float(value.imag))])
    figdir = outdir / "figures"
    figdir.mkdir(exist_ok=True)
    plots.save_lattice_heatmap(
        index_set, profile.variances, figdir / "variance_profile.png",
        title="per-index variance",
    )
    plots.save_lattice_heatmap(
        index_set, np.abs(realization.wavenumber_coeffs) ** 2,
        figdir / "channel_power.png", title="drawn wavenumber power",
    )
    click.echo(
        f"channel with {len(index_set)} wavenumber coefficients "
        f"(total variance {profile.total():.4f}) -> {outdir}"
    )


@main.command("analyze-leakage")
@_scenario_options
def analyze_leakage_cmd(config, preset_name, seed, snr_db, domain, estimator, out):
    """Compare angular vs wavenumber power concentration and pitch trade-offs."""
    scenario = _resolve_scenario(config, preset_name, seed, snr_db, domain, estimator)
    report = analyze_leakage(scenario)
    outdir = Path(out)
    write_leakage_outputs(report, outdir)
    figdir = outdir / "figures"
    figdir.mkdir(parents=True, exist_ok=True)
    plots.save_leakage_figure(report, figdir / "leakage_power.png")
    plots.save_fraction_figure(report, figdir / "captured_fraction.png")

    click.echo("pitch table:")
    for row in report.spacing_rows:
        click.echo(
            f"  delta = lambda*{row['spacing']}: N/L = "
            f"{row['dimensionality_ratio']:.4g}, mismatch probability = "
            f"{row['mismatch_probability']:.4g}"
        )
    click.echo(
        f"median captured fraction (top {report.top_k}): "
        f"wavenumber {report.median_fraction('wavenumber'):.4f}, "
        f"angular {report.median_fraction('angular'):.4f}"
    )


if __name__ == "__main__":
    main()
