"""Synthetic mixed-variable benchmarks and a random-search baseline.

The Ackley benchmark embeds each 17-way category j onto the grid value
-1 + 2j/16 and evaluates the standard Ackley function on the concatenated
6-vector, so the global minimum 0 sits at c = 0 with every category at
index 8.  The two smaller benchmarks use documented surrogate mixtures of
standard 2-d test functions (category-indexed), tagged ``surrogate=True``:
their externally defined closed forms are not bundled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bo import BoHistory, BoRecord
from .graphs import complete_graph
from .space import MixedPoint, SearchSpace


@dataclass(frozen=True)
class Benchmark:
    name: str
    space: SearchSpace
    evaluate: Callable[[MixedPoint], float]
    known_optimum: Optional[float] = None
    surrogate: bool = False


def ackley(x: np.ndarray, a: float = 20.0, b: float = 0.2, c: float = 2.0 * math.pi) -> float:
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    return float(
        -a * math.exp(-b * math.sqrt(np.sum(x**2) / d))
        - math.exp(np.sum(np.cos(c * x)) / d)
        + a
        + math.e
    )


def ackley5c() -> Benchmark:
    """1 continuous dim on [-1, 1] plus five 17-way categorical factors."""
    space = SearchSpace(
        lower=np.array([-1.0]),
        upper=np.array([1.0]),
        factors=tuple(complete_graph(17) for _ in range(5)),
    )

    def evaluate(x: MixedPoint) -> float:
        z = np.array([-1.0 + 2.0 * j / 16.0 for j in x.disc])
        return ackley(np.concatenate([x.cont_array, z]))

    return Benchmark("ackley5c", space, evaluate, known_optimum=0.0)


def _beale(c1: float, c2: float) -> float:
    return (
        (1.5 - c1 + c1 * c2) ** 2
        + (2.25 - c1 + c1 * c2**2) ** 2
        + (2.625 - c1 + c1 * c2**3) ** 2
    )


def _camel6(c1: float, c2: float) -> float:
    return (
        (4.0 - 2.1 * c1**2 + c1**4 / 3.0) * c1**2
        + c1 * c2
        + (-4.0 + 4.0 * c2**2) * c2**2
    )


def _rosenbrock(c1: float, c2: float) -> float:
    return (1.0 - c1) ** 2 + 100.0 * (c2 - c1**2) ** 2


_FUNC_BASES = (_beale, _camel6, _rosenbrock)
# Per-category scale/shift for the 5-way factor of the surrogate mixtures.
_FUNC_SCALES = (1.0, 0.5, 2.0, 0.25, 1.5)
_FUNC_SHIFTS = (0.0, 0.3, -0.3, 0.6, -0.6)


def _mixture_eval(x: MixedPoint) -> float:
    """Surrogate mixture value on ([-1,1]^2, v): scaled base function chosen by
    the 3-way factor plus a per-category quadratic shift from the 5-way factor."""
    c1, c2 = x.cont
    base = _FUNC_BASES[x.disc[0]](c1, c2)
    k = x.disc[1]
    return _FUNC_SCALES[k] * math.log1p(base) + _FUNC_SHIFTS[k] * (c1**2 - c2)


def func2c() -> Benchmark:
    """2 continuous dims on [-1, 1]^2, factors of sizes 3 and 5 (surrogate form)."""
    space = SearchSpace(
        lower=np.array([-1.0, -1.0]),
        upper=np.array([1.0, 1.0]),
        factors=(complete_graph(3), complete_graph(5)),
    )
    return Benchmark("func2c", space, _mixture_eval, surrogate=True)


def func3c() -> Benchmark:
    """2 continuous dims on [-1, 1]^2, factors of sizes 3, 5 and 4 (surrogate form)."""
    space = SearchSpace(
        lower=np.array([-1.0, -1.0]),
        upper=np.array([1.0, 1.0]),
        factors=(complete_graph(3), complete_graph(5), complete_graph(4)),
    )
    # third factor rotates the continuous coordinates before the mixture
    angles = tuple(i * math.pi / 8.0 for i in range(4))

    def evaluate(x: MixedPoint) -> float:
        a = angles[x.disc[2]]
        c1, c2 = x.cont
        r1 = math.cos(a) * c1 - math.sin(a) * c2
        r2 = math.sin(a) * c1 + math.cos(a) * c2
        return _mixture_eval(MixedPoint.make([r1, r2], x.disc[:2]))

    return Benchmark("func3c", space, evaluate, surrogate=True)


BENCHMARKS = {"ackley5c": ackley5c, "func2c": func2c, "func3c": func3c}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name.lower()]()
    except KeyError:
        raise ValueError(
            f"unknown benchmark {name!r}; expected one of {sorted(BENCHMARKS)}"
        ) from None


def random_search(
    space: SearchSpace,
    objective: Callable[[MixedPoint], float],
    budget: int,
    seed: int,
) -> BoHistory:
    """Uniform sampling baseline with the same history format as the BO loop."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    history = BoHistory()
    incumbent = math.inf
    for i in range(budget):
        x = space.sample(rng)
        y = float(objective(x))
        incumbent = min(incumbent, y)
        history.records.append(
            BoRecord(round=i, point=x, y=y, incumbent=incumbent,
                     fit_seconds=0.0, acquire_seconds=0.0)
        )
    return history
