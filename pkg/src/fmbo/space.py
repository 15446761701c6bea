"""Mixed search spaces: a continuous box times a product of factor graphs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import FactorGraph


class InvalidPointError(ValueError):
    """Raised when a point does not belong to its search space."""


@dataclass(frozen=True)
class MixedPoint:
    """A point (c, v): continuous coordinates plus one vertex index per factor.

    Coordinates are stored as plain tuples so points are hashable and compare
    exactly, which the duplicate-suggestion guard in acquisition relies on.
    """

    cont: tuple[float, ...]
    disc: tuple[int, ...]

    @property
    def cont_array(self) -> np.ndarray:
        return np.array(self.cont, dtype=float)

    @staticmethod
    def make(cont: Sequence[float], disc: Sequence[int]) -> "MixedPoint":
        return MixedPoint(tuple(float(c) for c in cont), tuple(int(v) for v in disc))


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds on the continuous part plus P factor graphs for the discrete part."""

    lower: np.ndarray
    upper: np.ndarray
    factors: tuple[FactorGraph, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper bound shape mismatch")
        if np.any(self.upper < self.lower):
            raise ValueError("upper bound below lower bound")
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim_cont(self) -> int:
        return self.lower.shape[0]

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.n for g in self.factors)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def validate(self, x: MixedPoint) -> None:
        if len(x.cont) != self.dim_cont or len(x.disc) != self.n_factors:
            raise InvalidPointError(
                f"point shape ({len(x.cont)}, {len(x.disc)}) does not match "
                f"space ({self.dim_cont}, {self.n_factors})"
            )
        c = x.cont_array
        if np.any(c < self.lower - 1e-12) or np.any(c > self.upper + 1e-12):
            raise InvalidPointError(f"continuous coordinates {x.cont} out of bounds")
        for p, v in enumerate(x.disc):
            if not 0 <= v < self.factors[p].n:
                raise InvalidPointError(f"vertex {v} out of range for factor {p}")

    def contains(self, x: MixedPoint) -> bool:
        try:
            self.validate(x)
        except InvalidPointError:
            return False
        return True

    def sample(self, rng: np.random.Generator) -> MixedPoint:
        """One uniform point: uniform in the box, uniform over vertices per factor."""
        cont = rng.uniform(self.lower, self.upper)
        disc = [int(rng.integers(g.n)) for g in self.factors]
        return MixedPoint.make(cont, disc)

    def sample_many(self, n: int, rng: np.random.Generator) -> list[MixedPoint]:
        return [self.sample(rng) for _ in range(n)]


def points_to_arrays(points: Sequence[MixedPoint]) -> tuple[np.ndarray, np.ndarray]:
    """Stack points into a (n, D_C) float array and a (n, P) int array."""
    cont = np.array([p.cont for p in points], dtype=float)
    disc = np.array([p.disc for p in points], dtype=int)
    if cont.ndim == 1:  # D_C == 0
        cont = cont.reshape(len(points), 0)
    if disc.ndim == 1:
        disc = disc.reshape(len(points), 0)
    return cont, disc
