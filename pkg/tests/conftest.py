"""Shared fixtures and independent oracle implementations.

The oracles here deliberately use plain loops and dense linear algebra so the
vectorized library code is checked against something structurally different.
"""

import math

import numpy as np
import pytest

from fmbo.graphs import FactorGraph, from_weighted_edges
from fmbo.kernels import FmFunction, Hyperparams, KernelSpec
from fmbo.space import MixedPoint, SearchSpace


def random_graph(rng: np.random.Generator, n: int) -> FactorGraph:
    """Random connected weighted graph built edge by edge."""
    while True:
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.6:
                    edges.append((i, j, float(rng.uniform(0.1, 2.0))))
        if not edges:
            continue
        g = from_weighted_edges(n, edges)
        if g.connected:
            return g


def random_space(rng: np.random.Generator, d_c: int = 2, sizes=(4, 5)) -> SearchSpace:
    return SearchSpace(
        lower=-np.ones(d_c),
        upper=np.ones(d_c),
        factors=tuple(random_graph(rng, n) for n in sizes),
    )


def random_hp(rng: np.random.Generator, space: SearchSpace) -> Hyperparams:
    return Hyperparams(
        theta=rng.uniform(0.3, 2.0, size=space.dim_cont),
        alpha=rng.uniform(0.1, 2.0, size=space.n_factors),
        beta=rng.uniform(0.1, 2.0, size=space.n_factors),
        sigma_f2=float(rng.uniform(0.5, 2.0)),
        sigma_n2=float(rng.uniform(1e-3, 1e-1)),
    )


def oracle_fm_scalar(fm: FmFunction, lam: float, mod: float, alpha: float, beta: float) -> float:
    """Scalar modulating function written with plain math only."""
    if fm.variant == "lap":
        return 1.0 / (1.0 + beta * lam + alpha * mod)
    if fm.variant == "dif":
        return math.exp(-(1.0 + alpha * mod) * beta * lam)
    if fm.variant == "family":
        total = 0.0
        for a_n, tau_n, rho_n in zip(fm.weights, fm.exponents, fm.powers):
            total += a_n / (1.0 + beta * lam + alpha * mod ** (tau_n / 2.0)) ** int(rho_n)
        return total
    return 1.0 / (2.0 + beta * lam - mod)


def oracle_nn(c, c2, sigma) -> float:
    c = np.asarray(c, float)
    c2 = np.asarray(c2, float)
    num = 2.0 * float(c @ sigma @ c2)
    den = (1.0 + float(c @ sigma @ c)) * (1.0 + float(c2 @ sigma @ c2))
    return (2.0 / math.pi) * math.asin(max(-1.0, min(1.0, num / den)))


def oracle_kernel(spec: KernelSpec, hp: Hyperparams, x: MixedPoint, x2: MixedPoint) -> float:
    """Double-loop kernel evaluation for any kernel form."""
    d2 = 0.0
    for d in range(len(x.cont)):
        d2 += (x.cont[d] - x2.cont[d]) ** 2 / hp.theta[d] ** 2
    if spec.form == "modfm":
        if spec.fm.variant == "nn":
            mod = oracle_nn(x.cont, x2.cont, spec.fm.sigma)
        else:
            mod = d2
        out = hp.sigma_f2
        for p, g in enumerate(spec.space.factors):
            s = 0.0
            for i in range(g.n):
                f = oracle_fm_scalar(
                    spec.fm, float(g.eigvals[i]), mod, float(hp.alpha[p]), float(hp.beta[p])
                )
                s += g.eigvecs[x.disc[p], i] * f * g.eigvecs[x2.disc[p], i]
            out *= s
        return out
    k_rbf = math.exp(-d2)
    k_disc = 1.0
    for p, g in enumerate(spec.space.factors):
        s = 0.0
        for i in range(g.n):
            lam = float(g.eigvals[i])
            f = 1.0 / (1.0 + hp.beta[p] * lam) if spec.disc_spectrum == "lap" \
                else math.exp(-hp.beta[p] * lam)
            s += g.eigvecs[x.disc[p], i] * f * g.eigvecs[x2.disc[p], i]
        k_disc *= s
    if spec.form == "cont":
        return hp.sigma_f2 * k_rbf
    if spec.form == "disc":
        return hp.sigma_f2 * k_disc
    if spec.form == "prod":
        return hp.sigma_f2 * k_rbf * k_disc
    return hp.sigma_f2 * (k_rbf + k_disc) / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(0)
