"""GP regression ablation over kernels on CSV data.

For each kernel and each seeded 80/20 split: fit on the training rows, report
test-set negative log likelihood (mean per-point Gaussian negative log density
using the predictive mean and variance plus observation noise) and RMSE.
Categorical columns become complete graphs with one vertex per training label;
an unseen test label is an error for that split, not an imputation.

``make_interaction_dataset`` ships a synthetic dataset whose target is a pure
continuous-discrete interaction:

    y = amp[v1] * cos(freq[v2] * pi * c) + eps,   eps ~ N(0, 0.05^2)

with amp = (1.0, -0.8, 1.6) over a 3-way factor and freq = (0.5, 1.0, 1.5, 2.5)
over a 4-way factor, c uniform on [-1, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .gp import Dataset, FitError, fit
from .graphs import complete_graph
from .kernels import kernel_spec_from_name
from .space import MixedPoint, SearchSpace

_INTERACTION_AMP = (1.0, -0.8, 1.6)
_INTERACTION_FREQ = (0.5, 1.0, 1.5, 2.5)
_INTERACTION_NOISE = 0.05


@dataclass
class SplitError:
    split: int
    reason: str


@dataclass
class KernelResult:
    kernel: str
    nll_values: list[float] = field(default_factory=list)
    rmse_values: list[float] = field(default_factory=list)
    errors: list[SplitError] = field(default_factory=list)

    @property
    def nll_mean(self) -> float:
        return float(np.mean(self.nll_values)) if self.nll_values else math.nan

    @property
    def nll_std(self) -> float:
        return float(np.std(self.nll_values, ddof=1)) if len(self.nll_values) > 1 else 0.0

    @property
    def rmse_mean(self) -> float:
        return float(np.mean(self.rmse_values)) if self.rmse_values else math.nan

    @property
    def rmse_std(self) -> float:
        return float(np.std(self.rmse_values, ddof=1)) if len(self.rmse_values) > 1 else 0.0


@dataclass
class Table:
    """Rows of (continuous values, categorical labels, target)."""

    cont: np.ndarray               # (n, D_C)
    cat: list[list[str]]           # n rows of P labels
    target: np.ndarray             # (n,)


def load_csv(
    path: Path, cont_cols: Sequence[str], cat_cols: Sequence[str], target_col: str
) -> Table:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        declared = set(cont_cols) | set(cat_cols) | {target_col}
        if set(header) != declared or len(declared) != len(cont_cols) + len(cat_cols) + 1:
            raise ValueError(
                f"column roles must cover the CSV columns exactly once; "
                f"header {header}, declared {sorted(declared)}"
            )
        cont_rows, cat_rows, targets = [], [], []
        for i, row in enumerate(reader):
            try:
                cont_rows.append([float(row[c]) for c in cont_cols])
                targets.append(float(row[target_col]))
            except ValueError as exc:
                raise ValueError(f"unparseable numeric value in row {i}: {exc}") from exc
            cat_rows.append([row[c] for c in cat_cols])
    if not targets:
        raise ValueError(f"no data rows in {path}")
    return Table(
        cont=np.array(cont_rows, dtype=float).reshape(len(targets), len(cont_cols)),
        cat=cat_rows,
        target=np.array(targets, dtype=float),
    )


def make_interaction_dataset(n: int = 120, seed: int = 0) -> Table:
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, size=n)
    v1 = rng.integers(len(_INTERACTION_AMP), size=n)
    v2 = rng.integers(len(_INTERACTION_FREQ), size=n)
    amp = np.array(_INTERACTION_AMP)[v1]
    freq = np.array(_INTERACTION_FREQ)[v2]
    y = amp * np.cos(freq * math.pi * c) + rng.normal(0.0, _INTERACTION_NOISE, size=n)
    cat = [[f"a{a}", f"f{f}"] for a, f in zip(v1, v2)]
    return Table(cont=c.reshape(n, 1), cat=cat, target=y)


def write_table_csv(table: Table, path: Path,
                    cont_cols: Sequence[str], cat_cols: Sequence[str],
                    target_col: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(cont_cols) + list(cat_cols) + [target_col])
        for i in range(table.target.shape[0]):
            writer.writerow(
                [repr(float(v)) for v in table.cont[i]]
                + list(table.cat[i])
                + [repr(float(table.target[i]))]
            )


def _split_indices(
    n: int, train_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_train = max(1, int(round(train_fraction * n)))
    return perm[:n_train], perm[n_train:]


def _points_for(
    table: Table, idx: np.ndarray, label_maps: list[dict[str, int]]
) -> list[MixedPoint]:
    points = []
    for i in idx:
        disc = []
        for p, labels in enumerate(label_maps):
            label = table.cat[i][p]
            if label not in labels:
                raise KeyError(f"unseen category {label!r} in column {p}")
            disc.append(labels[label])
        points.append(MixedPoint.make(table.cont[i], disc))
    return points


def evaluate_split(
    table: Table,
    kernel: str,
    split_seed: int,
    train_fraction: float = 0.8,
    restarts: int = 5,
    log_target: bool = False,
) -> tuple[float, float]:
    """(test NLL, test RMSE) for one seeded split."""
    rng = np.random.default_rng(split_seed)
    n = table.target.shape[0]
    train_idx, test_idx = _split_indices(n, train_fraction, rng)
    if test_idx.size == 0:
        raise ValueError("empty test set")

    label_maps = []
    for p in range(len(table.cat[0])):
        labels = sorted({table.cat[i][p] for i in train_idx})
        label_maps.append({lab: j for j, lab in enumerate(labels)})
    d_c = table.cont.shape[1]
    lower = table.cont[train_idx].min(axis=0) if d_c else np.zeros(0)
    upper = table.cont[train_idx].max(axis=0) if d_c else np.zeros(0)
    degenerate = upper - lower <= 0
    lower = np.where(degenerate, lower - 0.5, lower)
    upper = np.where(degenerate, upper + 0.5, upper)
    space = SearchSpace(
        lower=lower,
        upper=upper,
        factors=tuple(complete_graph(len(m)) for m in label_maps),
    )
    spec = kernel_spec_from_name(kernel, space)

    y = table.target
    if log_target:
        if np.any(y <= 0):
            raise ValueError("--log-target requires strictly positive targets")
        y = np.log(y)
    train_points = _points_for(table, train_idx, label_maps)
    test_points = _points_for(table, test_idx, label_maps)
    model = fit(spec, Dataset(tuple(train_points), y[train_idx]),
                restarts=restarts, seed=split_seed)

    from .gp import predict_batch

    mu, var = predict_batch(model, test_points)
    noise_var = model.hp.sigma_n2 * model.y_scale**2
    total_var = var + noise_var
    y_test = y[test_idx]
    nll = float(np.mean(
        0.5 * np.log(2.0 * math.pi * total_var) + (y_test - mu) ** 2 / (2.0 * total_var)
    ))
    rmse = float(np.sqrt(np.mean((y_test - mu) ** 2)))
    return nll, rmse


def run_regression(
    table: Table,
    kernels: Sequence[str],
    split_count: int = 20,
    train_fraction: float = 0.8,
    seed: int = 0,
    restarts: int = 5,
    log_target: bool = False,
) -> list[KernelResult]:
    results = []
    for kernel in kernels:
        result = KernelResult(kernel=kernel)
        for split in range(split_count):
            try:
                nll, rmse = evaluate_split(
                    table, kernel, split_seed=seed + split,
                    train_fraction=train_fraction, restarts=restarts,
                    log_target=log_target,
                )
            except (KeyError, ValueError, FitError) as exc:
                result.errors.append(SplitError(split, str(exc)))
                continue
            result.nll_values.append(nll)
            result.rmse_values.append(rmse)
        results.append(result)
    return results


def write_results_csv(results: Sequence[KernelResult], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["kernel", "nll_mean", "nll_std", "rmse_mean", "rmse_std",
             "splits_ok", "splits_skipped"]
        )
        for r in results:
            writer.writerow([
                r.kernel, repr(r.nll_mean), repr(r.nll_std),
                repr(r.rmse_mean), repr(r.rmse_std),
                len(r.nll_values), len(r.errors),
            ])


def format_results(results: Sequence[KernelResult]) -> str:
    lines = [f"{'kernel':<12} {'NLL (mean+-std)':<24} {'RMSE (mean+-std)':<24} skipped"]
    for r in results:
        lines.append(
            f"{r.kernel:<12} {r.nll_mean:>10.4f} +- {r.nll_std:<8.4f} "
            f"{r.rmse_mean:>10.4f} +- {r.rmse_std:<8.4f} {len(r.errors)}"
        )
    return "\n".join(lines)
