"""Kernels on mixed spaces.

The frequency-modulated (FM) forms evaluate, per factor graph, a sum over the
graph Fourier basis where each frequency component is modulated by a quantity
from the continuous part: the weighted squared distance for the Lap/Dif/Family
modulating functions, or the neural-network kernel value for the NN extension.
The per-factor sums are multiplied across factors; the continuous distance is
shared across factors, which couples the discrete variables.

Baseline forms combine an RBF kernel on the continuous part with a product of
per-factor spectral kernels (regularized Laplacian or diffusion) by product or
by (averaged) addition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .graphs import FactorGraph
from .space import MixedPoint, SearchSpace, points_to_arrays

# Kernel values with magnitude below this are flushed to zero (denormal guard).
_FLUSH = 1e-300

MOD_FORMS = ("modfm",)
BASELINE_FORMS = ("prod", "add", "cont", "disc")

KERNEL_NAMES = (
    "modlap",
    "moddif",
    "modfamily",
    "modnn",
    "prodlap",
    "proddif",
    "addlap",
    "adddif",
)


class KernelNumericError(ArithmeticError):
    """Raised when a kernel evaluation produces a non-finite value."""


class ShapeError(ValueError):
    """Raised on dimension mismatches between arguments."""


@dataclass(frozen=True)
class Hyperparams:
    """Kernel hyperparameters shared across kernel forms.

    theta: per-dimension continuous lengthscales (> 0).
    alpha: per-factor modulation strengths (>= 0).
    beta: per-factor spectral decays (>= 0).
    sigma_f2: signal variance (> 0); sigma_n2: observation noise (> 0).
    """

    theta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    sigma_f2: float
    sigma_n2: float

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))

    def validate(self) -> None:
        if not (np.all(np.isfinite(self.theta)) and np.all(self.theta > 0)):
            raise ValueError(f"lengthscales must be positive and finite: {self.theta}")
        if not (np.all(np.isfinite(self.alpha)) and np.all(self.alpha >= 0)):
            raise ValueError(f"alpha must be nonnegative and finite: {self.alpha}")
        if not (np.all(np.isfinite(self.beta)) and np.all(self.beta >= 0)):
            raise ValueError(f"beta must be nonnegative and finite: {self.beta}")
        if not (np.isfinite(self.sigma_f2) and self.sigma_f2 > 0):
            raise ValueError(f"sigma_f2 must be positive: {self.sigma_f2}")
        if not (np.isfinite(self.sigma_n2) and self.sigma_n2 > 0):
            raise ValueError(f"sigma_n2 must be positive: {self.sigma_n2}")


@dataclass(frozen=True)
class FmFunction:
    """A frequency-modulating function variant.

    variant 'lap':    1 / (1 + beta*lam + alpha*d2)
    variant 'dif':    exp(-(1 + alpha*d2) * beta * lam)
    variant 'family': sum_n weights[n] * (1 + beta*lam + alpha*d2**(exponents[n]/2))
                      ** (-powers[n]); the exponent applies to the distance, so
                      the squared distance d2 is raised to exponents[n]/2.
    variant 'nn':     1 / (2 + beta*lam - k_nn) where the modulation input is the
                      neural-network kernel value computed with ``sigma``.
    """

    variant: str
    weights: Optional[np.ndarray] = None
    exponents: Optional[np.ndarray] = None
    powers: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant not in ("lap", "dif", "family", "nn"):
            raise ValueError(f"unknown FM function variant {self.variant!r}")
        if self.variant == "family":
            w = np.asarray(self.weights, dtype=float)
            t = np.asarray(self.exponents, dtype=float)
            r = np.asarray(self.powers, dtype=int)
            if not (w.shape == t.shape == r.shape):
                raise ShapeError("family weights/exponents/powers must share shape")
            if np.any(w < 0) or not np.any(w > 0):
                raise ValueError("family weights must be >= 0 with at least one > 0")
            if np.any(t <= 0) or np.any(t > 2):
                raise ValueError("family exponents must lie in (0, 2]")
            if np.any(r < 1):
                raise ValueError("family powers must be positive integers")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "exponents", t)
            object.__setattr__(self, "powers", r)
        if self.variant == "nn":
            s = np.asarray(self.sigma, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise ShapeError("nn sigma must be a square matrix")
            if not np.allclose(s, s.T):
                raise ValueError("nn sigma must be symmetric")
            if np.any(np.linalg.eigvalsh(s) <= 0):
                raise ValueError("nn sigma must be positive definite")
            object.__setattr__(self, "sigma", s)


def fm_lap() -> FmFunction:
    return FmFunction("lap")


def fm_dif() -> FmFunction:
    return FmFunction("dif")


def fm_family(
    weights: Sequence[float], exponents: Sequence[float], powers: Sequence[int]
) -> FmFunction:
    return FmFunction("family", weights=np.asarray(weights, dtype=float),
                      exponents=np.asarray(exponents, dtype=float),
                      powers=np.asarray(powers, dtype=int))


def fm_nn(sigma: np.ndarray) -> FmFunction:
    return FmFunction("nn", sigma=np.asarray(sigma, dtype=float))


def default_family() -> FmFunction:
    # Three atoms of the discrete-measure family with tau = 2 throughout.
    return fm_family([0.5, 0.3, 0.2], [2.0, 2.0, 2.0], [1, 2, 3])


@dataclass(frozen=True)
class KernelSpec:
    """Kernel form bound to a search space.

    form: 'modfm' (FM kernel with ``fm``), 'prod', 'add', 'cont', 'disc'.
    disc_spectrum: 'lap' (1/(1+beta*lam)) or 'dif' (exp(-beta*lam)) for the
    baseline forms; ignored for 'modfm' and 'cont'.
    """

    form: str
    space: SearchSpace
    fm: Optional[FmFunction] = None
    disc_spectrum: str = "lap"

    def __post_init__(self):
        if self.form not in MOD_FORMS + BASELINE_FORMS:
            raise ValueError(f"unknown kernel form {self.form!r}")
        if self.form == "modfm" and self.fm is None:
            raise ValueError("modfm form requires an FmFunction")
        if self.disc_spectrum not in ("lap", "dif"):
            raise ValueError(f"unknown discrete spectrum {self.disc_spectrum!r}")

    def validate_hyperparams(self, hp: Hyperparams) -> None:
        hp.validate()
        if hp.theta.shape[0] != self.space.dim_cont:
            raise ShapeError("theta length does not match continuous dimension")
        if hp.alpha.shape[0] != self.space.n_factors:
            raise ShapeError("alpha length does not match factor count")
        if hp.beta.shape[0] != self.space.n_factors:
            raise ShapeError("beta length does not match factor count")


def kernel_spec_from_name(name: str, space: SearchSpace) -> KernelSpec:
    """Build the KernelSpec for a configuration-file kernel name."""
    name = name.lower()
    if name == "modlap":
        return KernelSpec("modfm", space, fm=fm_lap())
    if name == "moddif":
        return KernelSpec("modfm", space, fm=fm_dif())
    if name == "modfamily":
        return KernelSpec("modfm", space, fm=default_family())
    if name == "modnn":
        return KernelSpec("modfm", space, fm=fm_nn(np.eye(space.dim_cont)))
    if name in ("prodlap", "proddif", "addlap", "adddif"):
        form = "prod" if name.startswith("prod") else "add"
        spectrum = "lap" if name.endswith("lap") else "dif"
        return KernelSpec(form, space, disc_spectrum=spectrum)
    raise ValueError(f"unknown kernel name {name!r}; expected one of {KERNEL_NAMES}")


def weighted_sq_dist(c: Sequence[float], c2: Sequence[float], theta: Sequence[float]) -> float:
    """sum_d (c_d - c2_d)^2 / theta_d^2."""
    c = np.asarray(c, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if c.shape != c2.shape or c.shape != theta.shape:
        raise ShapeError(
            f"length mismatch: c {c.shape}, c2 {c2.shape}, theta {theta.shape}"
        )
    return float(np.sum((c - c2) ** 2 / theta**2))


def _pairwise_sq_dist(c1: np.ndarray, c2: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """(m1, m2) matrix of weighted squared distances."""
    if c1.shape[1] == 0:
        return np.zeros((c1.shape[0], c2.shape[0]))
    s1 = c1 / theta
    s2 = c2 / theta
    diff = s1[:, None, :] - s2[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def nn_kernel_eval(c: Sequence[float], c2: Sequence[float], sigma: np.ndarray) -> float:
    """Neural-network kernel (2/pi) arcsin(2 c^T S c' / ((1+c^T S c)(1+c'^T S c')))."""
    c = np.asarray(c, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if c.shape != c2.shape or sigma.shape != (c.shape[0], c.shape[0]):
        raise ShapeError("dimension mismatch in nn kernel arguments")
    return float(nn_kernel_matrix(c[None, :], c2[None, :], sigma)[0, 0])


def nn_kernel_matrix(c1: np.ndarray, c2: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """(m1, m2) matrix of neural-network kernel values, each in [-1, 1]."""
    cross = c1 @ sigma @ c2.T
    q1 = 1.0 + np.einsum("ij,jk,ik->i", c1, sigma, c1)
    q2 = 1.0 + np.einsum("ij,jk,ik->i", c2, sigma, c2)
    arg = 2.0 * cross / (q1[:, None] * q2[None, :])
    over = np.abs(arg) - 1.0
    if np.any(over > 1e-12):
        raise KernelNumericError(
            f"arcsin argument out of range by {float(over.max()):.3e}"
        )
    return (2.0 / np.pi) * np.arcsin(np.clip(arg, -1.0, 1.0))


def _fm_values(
    fm: FmFunction, lam: np.ndarray, mod: np.ndarray, alpha_p: float, beta_p: float
) -> np.ndarray:
    """f(lambda, modulation input) broadcast to mod.shape + lam.shape.

    ``mod`` is the squared weighted distance for lap/dif/family and the
    neural-network kernel value for nn.
    """
    lam = lam.reshape((1,) * mod.ndim + (-1,))
    mod = mod[..., None]
    if fm.variant == "lap":
        return 1.0 / (1.0 + beta_p * lam + alpha_p * mod)
    if fm.variant == "dif":
        return np.exp(-(1.0 + alpha_p * mod) * beta_p * lam)
    if fm.variant == "family":
        out = np.zeros(np.broadcast_shapes(lam.shape, mod.shape))
        for a_n, tau_n, rho_n in zip(fm.weights, fm.exponents, fm.powers):
            out = out + a_n / (1.0 + beta_p * lam + alpha_p * mod ** (tau_n / 2.0)) ** int(rho_n)
        return out
    # nn: modulation input is the bounded kernel value itself; alpha unused
    return 1.0 / (2.0 + beta_p * lam - mod)


def fm_function_eval(
    fm: FmFunction, lam: float, mod: float, alpha_p: float, beta_p: float
) -> float:
    """Scalar frequency-modulating function value.

    For the nn variant ``mod`` is the precomputed neural-network kernel value;
    otherwise it is the squared weighted distance.
    """
    val = float(_fm_values(fm, np.array([lam]), np.array(mod), alpha_p, beta_p)[0])
    if not np.isfinite(val):
        raise KernelNumericError(
            f"non-finite FM function value at lambda={lam}, mod={mod}"
        )
    return val


def _modulation_matrix(
    spec: KernelSpec, hp: Hyperparams, c1: np.ndarray, c2: np.ndarray
) -> np.ndarray:
    if spec.fm is not None and spec.fm.variant == "nn":
        return nn_kernel_matrix(c1, c2, spec.fm.sigma)
    return _pairwise_sq_dist(c1, c2, hp.theta)


def _modfm_cross(
    spec: KernelSpec, hp: Hyperparams, c1: np.ndarray, v1: np.ndarray,
    c2: np.ndarray, v2: np.ndarray,
) -> np.ndarray:
    mod = _modulation_matrix(spec, hp, c1, c2)
    out = np.full((c1.shape[0], c2.shape[0]), hp.sigma_f2)
    for p, g in enumerate(spec.space.factors):
        fv = _fm_values(spec.fm, g.eigvals, mod, float(hp.alpha[p]), float(hp.beta[p]))
        basis = g.eigvecs[v1[:, p]][:, None, :] * g.eigvecs[v2[:, p]][None, :, :]
        out = out * np.einsum("ijk,ijk->ij", basis, fv)
    return out


def _discrete_factor_matrices(spec: KernelSpec, hp: Hyperparams) -> list[np.ndarray]:
    mats = []
    for p, g in enumerate(spec.space.factors):
        if spec.disc_spectrum == "lap":
            fvals = 1.0 / (1.0 + hp.beta[p] * g.eigvals)
        else:
            fvals = np.exp(-hp.beta[p] * g.eigvals)
        m = (g.eigvecs * fvals) @ g.eigvecs.T
        mats.append((m + m.T) / 2.0)
    return mats


def discrete_gram(spec: KernelSpec, hp: Hyperparams, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """Product over factors of per-factor spectral kernel values (no amplitude)."""
    out = np.ones((v1.shape[0], v2.shape[0]))
    for p, m in enumerate(_discrete_factor_matrices(spec, hp)):
        out = out * m[np.ix_(v1[:, p], v2[:, p])]
    return out


def continuous_rbf(hp: Hyperparams, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """exp(-||c - c'||_theta^2); no 1/2 factor in the exponent."""
    return np.exp(-_pairwise_sq_dist(c1, c2, hp.theta))


def _baseline_cross(
    spec: KernelSpec, hp: Hyperparams, c1: np.ndarray, v1: np.ndarray,
    c2: np.ndarray, v2: np.ndarray,
) -> np.ndarray:
    if spec.form == "cont":
        return hp.sigma_f2 * continuous_rbf(hp, c1, c2)
    if spec.form == "disc":
        return hp.sigma_f2 * discrete_gram(spec, hp, v1, v2)
    k_rbf = continuous_rbf(hp, c1, c2)
    k_disc = discrete_gram(spec, hp, v1, v2)
    if spec.form == "prod":
        return hp.sigma_f2 * k_rbf * k_disc
    # 'add' is averaged so its diagonal scale matches 'prod'
    return hp.sigma_f2 * (k_rbf + k_disc) / 2.0


def cross_gram(
    spec: KernelSpec,
    hp: Hyperparams,
    points1: Sequence[MixedPoint],
    points2: Optional[Sequence[MixedPoint]] = None,
) -> np.ndarray:
    """Kernel matrix between two point lists (points1 x points2)."""
    spec.validate_hyperparams(hp)
    c1, v1 = points_to_arrays(points1)
    c2, v2 = (c1, v1) if points2 is None else points_to_arrays(points2)
    if spec.form == "modfm":
        out = _modfm_cross(spec, hp, c1, v1, c2, v2)
    else:
        out = _baseline_cross(spec, hp, c1, v1, c2, v2)
    if not np.all(np.isfinite(out)):
        raise KernelNumericError("kernel evaluation produced non-finite values")
    out[np.abs(out) < _FLUSH] = 0.0
    return out


def gram(spec: KernelSpec, hp: Hyperparams, points: Sequence[MixedPoint]) -> np.ndarray:
    """Symmetric Gram matrix; the upper triangle is computed and mirrored."""
    m = cross_gram(spec, hp, points)
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def diag_gram(spec: KernelSpec, hp: Hyperparams, points: Sequence[MixedPoint]) -> np.ndarray:
    """k(x, x) for each point, vectorized."""
    spec.validate_hyperparams(hp)
    c, v = points_to_arrays(points)
    m = c.shape[0]
    if spec.form == "modfm":
        if spec.fm.variant == "nn":
            q = np.einsum("ij,jk,ik->i", c, spec.fm.sigma, c)
            mod = (2.0 / np.pi) * np.arcsin(np.clip(2.0 * q / (1.0 + q) ** 2, -1.0, 1.0))
        else:
            mod = np.zeros(m)
        out = np.full(m, hp.sigma_f2)
        for p, g in enumerate(spec.space.factors):
            fv = _fm_values(spec.fm, g.eigvals, mod, float(hp.alpha[p]), float(hp.beta[p]))
            basis = g.eigvecs[v[:, p]] ** 2
            out = out * np.einsum("ik,ik->i", basis, fv)
    elif spec.form == "cont":
        out = np.full(m, hp.sigma_f2)
    else:
        d = np.ones(m)
        for p, mat in enumerate(_discrete_factor_matrices(spec, hp)):
            d = d * mat[v[:, p], v[:, p]]
        if spec.form == "disc":
            out = hp.sigma_f2 * d
        elif spec.form == "prod":
            out = hp.sigma_f2 * d
        else:  # add: k_rbf(x,x) == 1
            out = hp.sigma_f2 * (1.0 + d) / 2.0
    if not np.all(np.isfinite(out)):
        raise KernelNumericError("kernel evaluation produced non-finite values")
    return out


def fm_kernel_eval(spec: KernelSpec, hp: Hyperparams, x: MixedPoint, x2: MixedPoint) -> float:
    """Single FM kernel value; evaluation order is canonicalized for symmetry."""
    if spec.form != "modfm":
        raise ValueError("fm_kernel_eval requires a modfm spec")
    a, b = sorted([x, x2], key=lambda p: (p.cont, p.disc))
    return float(cross_gram(spec, hp, [a], [b])[0, 0])


def baseline_kernel_eval(
    spec: KernelSpec, hp: Hyperparams, x: MixedPoint, x2: MixedPoint
) -> float:
    """Single baseline (prod/add/cont/disc) kernel value."""
    if spec.form == "modfm":
        raise ValueError("baseline_kernel_eval requires a non-modfm spec")
    a, b = sorted([x, x2], key=lambda p: (p.cont, p.disc))
    return float(cross_gram(spec, hp, [a], [b])[0, 0])


def kernel_eval(spec: KernelSpec, hp: Hyperparams, x: MixedPoint, x2: MixedPoint) -> float:
    if spec.form == "modfm":
        return fm_kernel_eval(spec, hp, x, x2)
    return baseline_kernel_eval(spec, hp, x, x2)


def default_hyperparams(spec: KernelSpec) -> Hyperparams:
    space = spec.space
    return Hyperparams(
        theta=np.maximum(space.widths, 1.0),
        alpha=np.ones(space.n_factors),
        beta=np.ones(space.n_factors),
        sigma_f2=1.0,
        sigma_n2=1e-2,
    )
