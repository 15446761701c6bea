"""Gaussian-process regression on mixed spaces.

Log marginal likelihood via Cholesky with a jitter ladder, multi-start
hyperparameter fitting over log-transformed parameters, and predictive
mean/variance.  Targets are centered and scaled internally during ``fit``;
predictions are de-standardized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .kernels import Hyperparams, KernelSpec, cross_gram, diag_gram, gram
from .space import MixedPoint, points_to_arrays

# Jitter ladder relative to the mean Gram diagonal; Thm-level PSD holds
# analytically but finite precision does not.
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)

_LOG_BOUNDS = (math.log(1e-8), math.log(1e3))


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky failed at the maximum jitter level."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class FitError(RuntimeError):
    """All fitting restarts failed numerically."""


@dataclass(frozen=True)
class Dataset:
    points: tuple[MixedPoint, ...]
    targets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float))
        if len(self.points) != self.targets.shape[0]:
            raise ValueError("point/target count mismatch")
        if len(self.points) < 1:
            raise ValueError("dataset must contain at least one point")
        if not np.all(np.isfinite(self.targets)):
            raise ValueError("targets must be finite")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class GpModel:
    spec: KernelSpec
    hp: Hyperparams
    data: Dataset
    chol: np.ndarray          # lower-triangular factor of K_XX + sigma_n2*I (+ jitter)
    alpha_vec: np.ndarray     # (K_XX + sigma_n2*I)^{-1} y  (standardized y)
    y_shift: float = 0.0
    y_scale: float = 1.0

    def predict(self, x: MixedPoint) -> tuple[float, float]:
        mu, var = predict_batch(self, [x])
        return float(mu[0]), float(var[0])


def _chol_with_jitter(k: np.ndarray) -> tuple[np.ndarray, float]:
    mean_diag = float(np.mean(np.diag(k)))
    for jitter in _JITTERS:
        try:
            return cholesky(k + jitter * mean_diag * np.eye(k.shape[0]), lower=True), jitter
        except np.linalg.LinAlgError:
            continue
    min_eig = float(np.linalg.eigvalsh(k).min())
    raise NotPositiveDefiniteError(
        f"covariance not positive definite at max jitter (min eigenvalue {min_eig:.3e})",
        min_eig,
    )


def log_marginal_likelihood(spec: KernelSpec, hp: Hyperparams, data: Dataset) -> float:
    """-1/2 y^T (K + s^2 I)^{-1} y - 1/2 log|K + s^2 I| - n/2 log(2 pi)."""
    k = gram(spec, hp, list(data.points)) + hp.sigma_n2 * np.eye(data.n)
    chol, _ = _chol_with_jitter(k)
    y = data.targets
    alpha_vec = cho_solve((chol, True), y)
    return float(
        -0.5 * y @ alpha_vec
        - np.sum(np.log(np.diag(chol)))
        - 0.5 * data.n * math.log(2.0 * math.pi)
    )


def build_model(
    spec: KernelSpec,
    hp: Hyperparams,
    data: Dataset,
    standardize: bool = False,
) -> GpModel:
    """Assemble the Cholesky cache for given hyperparameters without fitting."""
    y = data.targets
    if standardize:
        shift = float(np.mean(y))
        scale = float(np.std(y))
        if scale <= 0:
            scale = 1.0
    else:
        shift, scale = 0.0, 1.0
    y_std = (y - shift) / scale
    k = gram(spec, hp, list(data.points)) + hp.sigma_n2 * np.eye(data.n)
    chol, _ = _chol_with_jitter(k)
    alpha_vec = cho_solve((chol, True), y_std)
    return GpModel(spec, hp, data, chol, alpha_vec, y_shift=shift, y_scale=scale)


def predict_batch(model: GpModel, points: Sequence[MixedPoint]) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and (clamped nonnegative) variances on the original y scale."""
    k_star = cross_gram(model.spec, model.hp, list(points), list(model.data.points))
    diag = diag_gram(model.spec, model.hp, list(points))
    mu = k_star @ model.alpha_vec
    w = solve_triangular(model.chol, k_star.T, lower=True)
    var = diag - np.einsum("ij,ij->j", w, w)
    var = np.clip(var, 0.0, diag)
    return model.y_shift + model.y_scale * mu, (model.y_scale**2) * var


def predict(model: GpModel, x: MixedPoint) -> tuple[float, float]:
    return model.predict(x)


# Which hyperparameters each kernel form actually uses during fitting.
def _active_parts(spec: KernelSpec) -> tuple[bool, bool, bool]:
    """(use_theta, use_alpha, use_beta)."""
    if spec.form == "modfm":
        if spec.fm.variant == "nn":
            return False, False, True
        return spec.space.dim_cont > 0, True, True
    if spec.form == "cont":
        return True, False, False
    if spec.form == "disc":
        return False, False, True
    return spec.space.dim_cont > 0, False, True  # prod / add


def _pack(spec: KernelSpec, hp: Hyperparams) -> np.ndarray:
    use_t, use_a, use_b = _active_parts(spec)
    parts = []
    if use_t:
        parts.append(np.log(hp.theta))
    if use_a:
        parts.append(np.log(np.maximum(hp.alpha, 1e-8)))
    if use_b:
        parts.append(np.log(np.maximum(hp.beta, 1e-8)))
    parts.append([math.log(hp.sigma_f2), math.log(hp.sigma_n2)])
    return np.concatenate([np.atleast_1d(p) for p in parts])


def _unpack(spec: KernelSpec, base: Hyperparams, x: np.ndarray) -> Hyperparams:
    use_t, use_a, use_b = _active_parts(spec)
    d_c, p = spec.space.dim_cont, spec.space.n_factors
    i = 0
    theta, alpha, beta = base.theta, base.alpha, base.beta
    if use_t:
        theta = np.exp(x[i : i + d_c])
        i += d_c
    if use_a:
        alpha = np.exp(x[i : i + p])
        i += p
    if use_b:
        beta = np.exp(x[i : i + p])
        i += p
    return Hyperparams(theta, alpha, beta, float(np.exp(x[i])), float(np.exp(x[i + 1])))


def _sample_init(
    spec: KernelSpec, rng: np.random.Generator, y_var: float
) -> Hyperparams:
    space = spec.space
    widths = np.maximum(space.widths, 1e-12)
    theta = widths * np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=space.dim_cont))
    alpha = rng.uniform(0.1, 2.0, size=space.n_factors)
    beta = rng.uniform(0.1, 2.0, size=space.n_factors)
    return Hyperparams(theta, alpha, beta, max(y_var, 1e-4), max(1e-2 * y_var, 1e-6))


def fit(
    spec: KernelSpec,
    data: Dataset,
    restarts: int = 10,
    seed: int = 0,
    warm_start: Optional[Hyperparams] = None,
    maxiter: int = 200,
) -> GpModel:
    """Multi-start maximization of the log marginal likelihood.

    Each restart samples an initialization and runs bounded quasi-Newton on the
    log-transformed active hyperparameters (numerical gradients).  Deterministic
    given ``seed``; ties across restarts break by restart index.  When
    ``warm_start`` is given it replaces the first sampled initialization.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    y = data.targets
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if scale <= 0:
        scale = 1.0
    y_std = (y - shift) / scale
    std_data = Dataset(data.points, y_std)
    y_var = max(float(np.var(y_std)), 1e-8)

    def objective(x: np.ndarray) -> float:
        hp = _unpack(spec, init_hp, x)
        try:
            return -log_marginal_likelihood(spec, hp, std_data)
        except (NotPositiveDefiniteError, ArithmeticError, np.linalg.LinAlgError):
            return 1e12

    best: Optional[tuple[float, Hyperparams]] = None
    failures = []
    for r in range(restarts):
        init_hp = _sample_init(spec, rng, y_var)
        if r == 0 and warm_start is not None:
            init_hp = warm_start
        x0 = _pack(spec, init_hp)
        bounds = [(_LOG_BOUNDS[0], _LOG_BOUNDS[1])] * x0.shape[0]
        try:
            res = minimize(
                objective,
                np.clip(x0, _LOG_BOUNDS[0], _LOG_BOUNDS[1]),
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": maxiter, "ftol": 1e-6},
            )
            value = float(res.fun)
            cand = _unpack(spec, init_hp, res.x)
            start_value = objective(np.clip(x0, *_LOG_BOUNDS))
            if start_value < value:
                value, cand = start_value, _unpack(spec, init_hp, np.clip(x0, *_LOG_BOUNDS))
        except Exception as exc:  # noqa: BLE001 - restart isolation
            failures.append(exc)
            continue
        if value >= 1e12:
            failures.append(RuntimeError("objective non-finite for whole restart"))
            continue
        if best is None or value < best[0]:
            best = (value, cand)
    if best is None:
        raise FitError(f"all {restarts} restarts failed: {failures[-1] if failures else 'n/a'}")

    model = build_model(spec, best[1], data, standardize=True)
    return model
