"""Command-line harness.

Every command reads a JSON experiment config, a seed and an output
directory, writes CSV artifacts plus a manifest, and prints the paths it
produced. See the README for the config schema.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import bench
from .estimator import KNOWN_SAMPLING, CompletionProblem, fit as solve
from .io import (
    load_matrix_csv,
    load_observations_csv,
    save_matrix_csv,
    save_observations_csv,
    write_manifest,
)


def _load_cfg(config_path) -> bench.ExperimentConfig:
    raw = json.loads(Path(config_path).read_text())
    return bench.ExperimentConfig.from_dict(raw)


def _prepare(out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


_shared = [
    click.option("--config", "config_path", required=True, type=click.Path(exists=True)),
    click.option("--seed", required=True, type=int),
    click.option("--out", required=True, type=click.Path()),
]


def shared_options(f):
    for opt in reversed(_shared):
        f = opt(f)
    return f


@click.group()
def main():
    """Low-rank matrix completion under exponential-family noise."""


@main.command()
@shared_options
def gen(config_path, seed, out):
    """Generate a ground-truth matrix and write it as truth.csv."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    rng = np.random.default_rng([seed, 0])
    truth = bench.gen_truth(
        cfg.m1, cfg.m2, cfg.rank, cfg.gamma, cfg.family, rng, box=cfg.box, style=cfg.truth_style
    )
    save_matrix_csv(out / "truth.csv", truth.x_bar)
    write_manifest(out, "gen", cfg.raw, seed)
    click.echo(str(out / "truth.csv"))


@main.command()
@shared_options
def simulate(config_path, seed, out):
    """Draw observations from a truth matrix (generated unless truth_path is set)."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    rng = np.random.default_rng([seed, 0])
    if "truth_path" in cfg.raw:
        x_bar = load_matrix_csv(cfg.raw["truth_path"])
        truth = bench.GroundTruth(x_bar=x_bar, r=cfg.rank, gamma=cfg.gamma)
    else:
        truth = bench.gen_truth(
            cfg.m1, cfg.m2, cfg.rank, cfg.gamma, cfg.family, rng, box=cfg.box, style=cfg.truth_style
        )
        save_matrix_csv(out / "truth.csv", truth.x_bar)
    obs = bench.simulate(truth, cfg.family, cfg.scheme(), cfg.n_single, rng, noiseless=cfg.noiseless)
    save_observations_csv(out / "observations.csv", obs)
    write_manifest(out, "simulate", cfg.raw, seed)
    click.echo(str(out / "observations.csv"))


@main.command("fit")
@shared_options
def fit_cmd(config_path, seed, out):
    """Fit the penalized estimator on observations (observations_path or simulated)."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    rng = np.random.default_rng([seed, 0])
    scheme = cfg.scheme()
    consts = cfg.family.interval_constants(cfg.box)
    n = cfg.n_single

    truth = None
    if "truth_path" in cfg.raw:
        truth = bench.GroundTruth(
            x_bar=load_matrix_csv(cfg.raw["truth_path"]), r=cfg.rank, gamma=cfg.gamma
        )
    if "observations_path" in cfg.raw:
        obs = load_observations_csv(cfg.raw["observations_path"], cfg.m1, cfg.m2)
    else:
        if truth is None:
            truth = bench.gen_truth(
                cfg.m1, cfg.m2, cfg.rank, cfg.gamma, cfg.family, rng,
                box=cfg.box, style=cfg.truth_style,
            )
            save_matrix_csv(out / "truth.csv", truth.x_bar)
        obs = bench.simulate(truth, cfg.family, scheme, n, rng, noiseless=cfg.noiseless)
        save_observations_csv(out / "observations.csv", obs)

    if cfg.lambda_mode == "oracle" and truth is None:
        raise click.UsageError("lambda_mode 'oracle' needs a truth_path")
    lam = bench.resolve_lambda(cfg, consts, scheme, obs.n, obs, truth.x_bar if truth else None)
    problem = CompletionProblem(
        obs=obs, family=cfg.family, box=cfg.box, lam=lam, mode=cfg.mode,
        scheme=scheme if cfg.mode == KNOWN_SAMPLING else None,
    )
    result = solve(problem, cfg.solver)
    save_matrix_csv(out / "estimate.csv", result.x_hat)
    report = {
        "converged": result.converged,
        "iterations": result.iterations,
        "lambda": result.lambda_used,
        "prox_residual": result.prox_residual,
        "objective_first": result.objective_trace[0],
        "objective_last": result.objective_trace[-1],
    }
    (out / "fit.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "fit", cfg.raw, seed)
    click.echo(str(out / "estimate.csv"))


@main.command("rate-sweep")
@shared_options
def rate_sweep_cmd(config_path, seed, out):
    """Run the risk-versus-rate sweep and write rate_sweep.csv."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    result = bench.rate_sweep(cfg, seed, out_dir=out)
    write_manifest(out, "rate-sweep", cfg.raw, seed)
    click.echo(f"{out / 'rate_sweep.csv'} slope={result.slope!r}")


@main.command("oracle-check")
@shared_options
def oracle_check_cmd(config_path, seed, out):
    """Run oracle-inequality checks and write oracle_check.csv."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    result = bench.oracle_check(cfg, seed, out_dir=out)
    write_manifest(out, "oracle-check", cfg.raw, seed)
    click.echo(f"{out / 'oracle_check.csv'} all_passed={result.all_passed}")


@main.command("concentration")
@shared_options
def concentration_cmd(config_path, seed, out):
    """Run concentration diagnostics and write concentration.csv."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    result = bench.concentration_check(cfg, seed, out_dir=out)
    write_manifest(out, "concentration", cfg.raw, seed)
    click.echo(
        f"{out / 'concentration.csv'} rademacher={result.rademacher_estimate!r} "
        f"bound={result.rademacher_bound!r}"
    )


@main.command("lower-bound")
@shared_options
def lower_bound_cmd(config_path, seed, out):
    """Build/verify a packing, fit its members, write lower_bound.csv."""
    cfg = _load_cfg(config_path)
    out = _prepare(out)
    result = bench.lowerbound_run(cfg, seed, out_dir=out)
    write_manifest(out, "lower-bound", cfg.raw, seed)
    passed = all(row["conditions_passed"] for row in result.summary_rows)
    click.echo(f"{out / 'lower_bound_summary.csv'} conditions_passed={passed}")


if __name__ == "__main__":
    main()
