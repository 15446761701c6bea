"""Weighted undirected graphs for discrete variables and their Laplacian spectra.

Each discrete variable is represented by one graph whose vertices are the
variable's admissible values.  The graph Laplacian L = D - A is
eigendecomposed once at construction; kernels only ever consume the cached
eigenvalues (frequencies) and eigenvectors (graph Fourier basis).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

# Eigenvalues below this relative magnitude are clamped to exactly zero:
# L is PSD analytically and spectrum functions are defined on [0, inf).
_EIG_CLAMP_REL = 1e-10


class InvalidGraphError(ValueError):
    """Raised for structurally invalid graph constructions."""


class SpectrumFunctionError(ArithmeticError):
    """Raised when a spectrum function returns a non-finite value.

    Carries the offending eigenvalue in ``eigenvalue``.
    """

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class FactorGraph:
    """One discrete variable's graph with its cached Laplacian spectrum.

    Immutable after construction; safe to share across threads.
    """

    n: int
    weights: np.ndarray          # (n, n) symmetric, nonnegative, zero diagonal
    eigvals: np.ndarray          # (n,) ascending, eigvals[0] == 0
    eigvecs: np.ndarray          # (n, n) orthonormal, column i pairs with eigvals[i]
    connected: bool
    _neighbors: tuple = field(repr=False, default=())

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.eigvals.setflags(write=False)
        self.eigvecs.setflags(write=False)

    def neighbors(self, v: int) -> np.ndarray:
        """Vertices joined to ``v`` by a positive-weight edge."""
        return self._neighbors[v]

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.weights.sum(axis=1)) - self.weights


def _union_find_connected(n: int, weights: np.ndarray) -> bool:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if weights[i, j] > 0:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    return len({find(i) for i in range(n)}) == 1


def _build(weights: np.ndarray) -> FactorGraph:
    n = weights.shape[0]
    laplacian = np.diag(weights.sum(axis=1)) - weights
    eigvals, eigvecs = np.linalg.eigh(laplacian)
    lam_max = float(eigvals[-1]) if n > 1 else 0.0
    clamp = _EIG_CLAMP_REL * max(1.0, lam_max)
    eigvals = np.where(np.abs(eigvals) < clamp, 0.0, eigvals)
    neighbors = tuple(np.flatnonzero(weights[v] > 0) for v in range(n))
    return FactorGraph(
        n=n,
        weights=weights,
        eigvals=eigvals,
        eigvecs=eigvecs,
        connected=_union_find_connected(n, weights),
        _neighbors=neighbors,
    )


def complete_graph(n: int) -> FactorGraph:
    """Unweighted complete graph K_n; spectrum {0, n, ..., n}."""
    if n < 1:
        raise InvalidGraphError(f"vertex count must be >= 1, got {n}")
    weights = np.ones((n, n)) - np.eye(n)
    return _build(weights)


def path_graph(n: int) -> FactorGraph:
    """Path graph with unit weights on consecutive vertices (ordinal variables)."""
    if n < 1:
        raise InvalidGraphError(f"vertex count must be >= 1, got {n}")
    weights = np.zeros((n, n))
    for i in range(n - 1):
        weights[i, i + 1] = weights[i + 1, i] = 1.0
    return _build(weights)


def from_weighted_edges(n: int, edges: Iterable[tuple[int, int, float]]) -> FactorGraph:
    """Graph from an explicit edge list; duplicate edges have their weights summed."""
    if n < 1:
        raise InvalidGraphError(f"vertex count must be >= 1, got {n}")
    weights = np.zeros((n, n))
    for i, j, w in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidGraphError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise InvalidGraphError(f"self-loop on vertex {i} rejected")
        if not w > 0:
            raise InvalidGraphError(f"edge ({i}, {j}) has nonpositive weight {w}")
        weights[i, j] += w
        weights[j, i] += w
    return _build(weights)


def spectral_transform(g: FactorGraph, h: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """U diag(h(lambda)) U^T, symmetrized exactly via (M + M^T) / 2."""
    hvals = np.asarray(h(g.eigvals), dtype=float)
    if hvals.shape != g.eigvals.shape:
        hvals = np.broadcast_to(hvals, g.eigvals.shape)
    bad = ~np.isfinite(hvals)
    if bad.any():
        lam = float(g.eigvals[np.argmax(bad)])
        raise SpectrumFunctionError(
            f"spectrum function returned a non-finite value at lambda={lam}", lam
        )
    m = (g.eigvecs * hvals) @ g.eigvecs.T
    return (m + m.T) / 2.0
