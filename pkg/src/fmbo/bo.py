"""The outer Bayesian-optimization loop in ask/tell form.

Each round after the initial random design refits the GP on the full history
and maximizes expected improvement.  The loop is deterministic given the seed
and writes an append-only JSONL trace when a path is configured.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .acquire import AcquireConfig, acquire_next
from .gp import Dataset, FitError, GpModel, fit
from .kernels import Hyperparams, kernel_spec_from_name
from .space import MixedPoint, SearchSpace


@dataclass(frozen=True)
class BoConfig:
    kernel: str = "modlap"
    acquire: AcquireConfig = field(default_factory=AcquireConfig)
    n_init: int = 10
    budget: int = 50
    restarts: int = 10
    seed: int = 0
    warm_start: bool = True   # reuse previous best hyperparameters as restart #1
    fit_maxiter: int = 200

    def __post_init__(self):
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.budget < self.n_init:
            raise ValueError("budget must be >= n_init")


@dataclass
class BoRecord:
    round: int
    point: MixedPoint
    y: float
    incumbent: float
    fit_seconds: float
    acquire_seconds: float
    hp: Optional[dict] = None
    fit_failed: bool = False

    def to_json(self) -> dict:
        rec = {
            "round": self.round,
            "point": {"cont": list(self.point.cont), "disc": list(self.point.disc)},
            "y": self.y,
            "incumbent": self.incumbent,
            "fit_seconds": self.fit_seconds,
            "acquire_seconds": self.acquire_seconds,
        }
        if self.hp is not None:
            rec["hp"] = self.hp
        if self.fit_failed:
            rec["fit_failed"] = True
        return rec


@dataclass
class BoHistory:
    records: list[BoRecord] = field(default_factory=list)

    @property
    def points(self) -> list[MixedPoint]:
        return [r.point for r in self.records]

    @property
    def targets(self) -> np.ndarray:
        return np.array([r.y for r in self.records])

    @property
    def incumbents(self) -> np.ndarray:
        return np.array([r.incumbent for r in self.records])

    @property
    def incumbent(self) -> float:
        return self.records[-1].incumbent

    @property
    def incumbent_point(self) -> MixedPoint:
        best = min(self.records, key=lambda r: r.y)
        return best.point

    def write_jsonl(self, path: Path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json()) + "\n")

    def write_csv(self, path: Path) -> None:
        with open(path, "w") as fh:
            fh.write("round,incumbent\n")
            for rec in self.records:
                fh.write(f"{rec.round},{rec.incumbent!r}\n")


def _hp_snapshot(hp: Hyperparams) -> dict:
    return {
        "theta": list(hp.theta),
        "alpha": list(hp.alpha),
        "beta": list(hp.beta),
        "sigma_f2": hp.sigma_f2,
        "sigma_n2": hp.sigma_n2,
    }


class BoState:
    """Ask/tell driver.  ``ask`` proposes a point, ``tell`` records its value."""

    def __init__(self, space: SearchSpace, config: BoConfig):
        self.space = space
        self.config = config
        self.spec = kernel_spec_from_name(config.kernel, space)
        self.history = BoHistory()
        self._rng = np.random.default_rng(config.seed)
        self._round_seeds = np.random.default_rng(config.seed + 1)
        self._last_hp: Optional[Hyperparams] = None
        self._pending_fit_seconds = 0.0
        self._pending_acquire_seconds = 0.0
        self._pending_fit_failed = False

    @property
    def n_told(self) -> int:
        return len(self.history.records)

    def ask(self) -> MixedPoint:
        self._pending_fit_seconds = 0.0
        self._pending_acquire_seconds = 0.0
        self._pending_fit_failed = False
        round_seed = int(self._round_seeds.integers(2**31))
        if self.n_told < self.config.n_init:
            return self.space.sample(self._rng)
        data = Dataset(tuple(self.history.points), self.history.targets)
        t0 = time.perf_counter()
        try:
            model = fit(
                self.spec,
                data,
                restarts=self.config.restarts,
                seed=round_seed,
                warm_start=self._last_hp if self.config.warm_start else None,
                maxiter=self.config.fit_maxiter,
            )
        except FitError:
            self._pending_fit_seconds = time.perf_counter() - t0
            self._pending_fit_failed = True
            return self.space.sample(self._rng)
        self._pending_fit_seconds = time.perf_counter() - t0
        self._last_hp = model.hp
        t1 = time.perf_counter()
        point = acquire_next(
            model,
            self.space,
            self.history.points,
            self.history.incumbent_point,
            self.history.incumbent,
            self.config.acquire,
            seed=round_seed,
        )
        self._pending_acquire_seconds = time.perf_counter() - t1
        return point

    def tell(self, x: MixedPoint, y: float) -> None:
        if not np.isfinite(y):
            raise ValueError(f"objective value must be finite, got {y}")
        self.space.validate(x)
        incumbent = min(float(y), self.history.incumbent) if self.history.records else float(y)
        self.history.records.append(
            BoRecord(
                round=self.n_told,
                point=x,
                y=float(y),
                incumbent=incumbent,
                fit_seconds=self._pending_fit_seconds,
                acquire_seconds=self._pending_acquire_seconds,
                hp=_hp_snapshot(self._last_hp) if self._last_hp is not None else None,
                fit_failed=self._pending_fit_failed,
            )
        )


def run(
    config: BoConfig,
    space: SearchSpace,
    objective: Callable[[MixedPoint], float],
    trace_path: Optional[Path] = None,
) -> BoHistory:
    """Execute ask/tell for ``budget`` rounds.

    An objective error aborts the run with the partial history persisted to
    ``trace_path`` (when given) before re-raising.
    """
    state = BoState(space, config)
    try:
        for _ in range(config.budget):
            x = state.ask()
            y = objective(x)
            state.tell(x, y)
    finally:
        if trace_path is not None:
            state.history.write_jsonl(Path(trace_path))
    return state.history
