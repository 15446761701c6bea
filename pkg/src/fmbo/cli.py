"""Command-line entry point: ``fmbo bo``, ``fmbo regress``, ``fmbo verify``.

Configuration comes from an INI-style file with sections ([bo], [acquire],
[regress], [verify]); command-line flags override file values.  Exit codes:
0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np

from . import bench, regress, verify
from .acquire import AcquireConfig
from .bo import BoConfig, run
from .kernels import KERNEL_NAMES


def _load_config(path: Optional[str]) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).exists():
            raise click.UsageError(f"config file {path} does not exist")
        parser.read(path)
    return parser


def _cfg(parser: configparser.ConfigParser, section: str, key: str, override, default):
    if override is not None:
        return override
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    return default


def _check_output(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise click.ClickException(
            f"{path} already exists; pass --force to overwrite"
        )


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("FMBO_THREADS", "1")))
    except ValueError:
        return 1


@click.group()
def main() -> None:
    """Mixed-variable Bayesian optimization with graph-spectral FM kernels."""


@main.command("bo")
@click.option("-c", "--config", "config_path", type=click.Path(), default=None,
              help="INI configuration file.")
@click.option("--benchmark", default=None, help="ackley5c | func2c | func3c")
@click.option("--kernel", default=None, help="|".join(KERNEL_NAMES))
@click.option("--budget", type=int, default=None)
@click.option("--n-init", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seeds", default=None, help="comma-separated seed list")
@click.option("--n-random", type=int, default=None)
@click.option("--n-spray", type=int, default=None)
@click.option("--n-starts", type=int, default=None)
@click.option("--outdir", type=click.Path(), default=None)
@click.option("--force", is_flag=True, help="overwrite existing outputs")
def cmd_bo(config_path, benchmark, kernel, budget, n_init, restarts, seeds,
           n_random, n_spray, n_starts, outdir, force) -> None:
    """Run benchmark BO over a list of seeds; write per-seed JSONL traces and a
    summary CSV of the incumbent mean +- standard error per round."""
    parser = _load_config(config_path)
    benchmark = _cfg(parser, "bo", "benchmark", benchmark, "ackley5c")
    kernel = _cfg(parser, "bo", "kernel", kernel, "modlap")
    budget = _cfg(parser, "bo", "budget", budget, 50)
    n_init = _cfg(parser, "bo", "n_init", n_init, 10)
    restarts = _cfg(parser, "bo", "restarts", restarts, 10)
    seeds_raw = _cfg(parser, "bo", "seeds", seeds, "0,1,2,3,4")
    outdir = Path(_cfg(parser, "bo", "outdir", outdir, "fmbo_out"))
    seed_list = [int(s) for s in str(seeds_raw).split(",") if s.strip() != ""]
    acquire_cfg = AcquireConfig(
        n_random=_cfg(parser, "acquire", "n_random", n_random, 2000),
        n_spray=_cfg(parser, "acquire", "n_spray", n_spray, 20),
        n_starts=_cfg(parser, "acquire", "n_starts", n_starts, 10),
        max_alternations=_cfg(parser, "acquire", "max_alternations", None, 100),
        tol=_cfg(parser, "acquire", "tol", None, 1e-8),
        spray_cont_sigma=_cfg(parser, "acquire", "spray_cont_sigma", None, 1e-2),
        spray_disc_moves=_cfg(parser, "acquire", "spray_disc_moves", None, 1),
    )
    try:
        bm = bench.get_benchmark(benchmark)
        if kernel not in KERNEL_NAMES:
            raise ValueError(f"unknown kernel {kernel!r}")
    except ValueError as exc:
        raise click.UsageError(str(exc))

    outdir.mkdir(parents=True, exist_ok=True)
    summary_path = outdir / f"{benchmark}_{kernel}_summary.csv"
    _check_output(summary_path, force)
    trace_paths = {
        seed: outdir / f"{benchmark}_{kernel}_seed{seed}.jsonl" for seed in seed_list
    }
    for path in trace_paths.values():
        _check_output(path, force)

    def one_seed(seed: int):
        config = BoConfig(kernel=kernel, acquire=acquire_cfg, n_init=n_init,
                          budget=budget, restarts=restarts, seed=seed)
        return run(config, bm.space, bm.evaluate, trace_path=trace_paths[seed])

    workers = _max_workers()
    try:
        if workers > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                histories = list(pool.map(one_seed, seed_list))
        else:
            histories = [one_seed(seed) for seed in seed_list]
    except Exception as exc:  # noqa: BLE001 - partial traces already persisted
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(1)

    curves = np.array([h.incumbents for h in histories])  # (n_seeds, budget)
    with open(summary_path, "w") as fh:
        fh.write("round,mean,stderr\n")
        for r in range(budget):
            col = curves[:, r]
            mean = float(np.mean(col))
            stderr = (
                float(np.std(col, ddof=1) / math.sqrt(len(seed_list)))
                if len(seed_list) > 1 else 0.0
            )
            fh.write(f"{r},{mean!r},{stderr!r}\n")
    click.echo(f"wrote {summary_path} and {len(seed_list)} trace files")


@main.command("regress")
@click.option("-c", "--config", "config_path", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="input CSV; omit with --synthetic to use the shipped generator")
@click.option("--cont-cols", default=None, help="comma-separated continuous columns")
@click.option("--cat-cols", default=None, help="comma-separated categorical columns")
@click.option("--target-col", default=None)
@click.option("--kernels", default=None, help="comma-separated kernel names")
@click.option("--splits", type=int, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--synthetic", type=int, default=None,
              help="generate the documented interaction dataset with N rows")
@click.option("--log-target", is_flag=True, help="fit on log-transformed targets")
@click.option("--outdir", type=click.Path(), default=None)
@click.option("--force", is_flag=True)
def cmd_regress(config_path, csv_path, cont_cols, cat_cols, target_col, kernels,
                splits, train_fraction, restarts, seed, synthetic, log_target,
                outdir, force) -> None:
    """Kernel ablation on CSV data: NLL and RMSE over seeded random splits."""
    parser = _load_config(config_path)
    csv_path = _cfg(parser, "regress", "csv", csv_path, None)
    kernels_raw = _cfg(parser, "regress", "kernels", kernels, "modlap,moddif,addlap")
    splits = _cfg(parser, "regress", "splits", splits, 20)
    train_fraction = _cfg(parser, "regress", "train_fraction", train_fraction, 0.8)
    restarts = _cfg(parser, "regress", "restarts", restarts, 5)
    seed = _cfg(parser, "regress", "seed", seed, 0)
    outdir = Path(_cfg(parser, "regress", "outdir", outdir, "fmbo_out"))
    kernel_list = [k.strip() for k in str(kernels_raw).split(",") if k.strip()]
    for k in kernel_list:
        if k not in KERNEL_NAMES:
            raise click.UsageError(f"unknown kernel {k!r}")

    if synthetic is not None:
        table = regress.make_interaction_dataset(n=synthetic, seed=seed)
    elif csv_path is not None:
        cont_list = [c.strip() for c in str(
            _cfg(parser, "regress", "cont_cols", cont_cols, "")).split(",") if c.strip()]
        cat_list = [c.strip() for c in str(
            _cfg(parser, "regress", "cat_cols", cat_cols, "")).split(",") if c.strip()]
        target = _cfg(parser, "regress", "target_col", target_col, "y")
        try:
            table = regress.load_csv(Path(csv_path), cont_list, cat_list, target)
        except (OSError, ValueError) as exc:
            click.echo(f"failed to load {csv_path}: {exc}", err=True)
            sys.exit(1)
    else:
        raise click.UsageError("either --csv or --synthetic is required")

    outdir.mkdir(parents=True, exist_ok=True)
    out_path = outdir / "regression.csv"
    _check_output(out_path, force)
    try:
        results = regress.run_regression(
            table, kernel_list, split_count=splits, train_fraction=train_fraction,
            seed=seed, restarts=restarts, log_target=log_target,
        )
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(1)
    regress.write_results_csv(results, out_path)
    click.echo(regress.format_results(results))
    click.echo(f"wrote {out_path}")


@main.command("verify")
@click.option("-c", "--config", "config_path", type=click.Path(), default=None)
@click.option("--trials-psd", type=int, default=None)
@click.option("--trials-nonneg", type=int, default=None)
@click.option("--trials-mono", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--outdir", type=click.Path(), default=None)
@click.option("--force", is_flag=True)
@click.option("--inject-failure", is_flag=True, hidden=True,
              help="test hook: negate the FM kernel so the PSD check fails")
def cmd_verify(config_path, trials_psd, trials_nonneg, trials_mono, seed,
               outdir, force, inject_failure) -> None:
    """Run the theorem-check suite; exit 0 iff all gated checks pass."""
    parser = _load_config(config_path)
    trials_psd = _cfg(parser, "verify", "trials_psd", trials_psd, 200)
    trials_nonneg = _cfg(parser, "verify", "trials_nonneg", trials_nonneg, 500)
    trials_mono = _cfg(parser, "verify", "trials_mono", trials_mono, 300)
    seed = _cfg(parser, "verify", "seed", seed, 0)
    outdir = Path(_cfg(parser, "verify", "outdir", outdir, "fmbo_out"))
    outdir.mkdir(parents=True, exist_ok=True)
    out_path = outdir / "checks.jsonl"
    _check_output(out_path, force)

    reports = verify.run_default_suite(
        trials_psd=trials_psd, trials_nonneg=trials_nonneg,
        trials_mono=trials_mono, seed=seed, negate_fm=inject_failure,
    )
    with open(out_path, "w") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")
    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        gate = "" if r.gated else " (informational)"
        click.echo(f"{r.name:<{width}}  {status}  margin={r.worst_margin:.3e}{gate}")
    click.echo(f"wrote {out_path}")
    if any(not r.passed for r in reports if r.gated):
        sys.exit(1)


if __name__ == "__main__":
    main()
