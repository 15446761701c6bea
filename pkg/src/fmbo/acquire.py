"""Expected-improvement acquisition and its optimization over mixed spaces.

Candidate points (uniform random plus spray points near the incumbent) are
scored by EI; the best few seed local searches that alternate greedy hill
climbing on the discrete part with a bounded quasi-Newton pass on the
continuous part.  Minimization convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .gp import GpModel, predict_batch
from .space import MixedPoint, SearchSpace


@dataclass(frozen=True)
class AcquireConfig:
    n_random: int = 2000            # paper scale: 100000
    n_spray: int = 20               # paper scale: 50
    n_starts: int = 10              # paper scale: 40
    max_alternations: int = 100
    tol: float = 1e-8
    spray_cont_sigma: float = 1e-2  # relative to box width
    spray_disc_moves: int = 1

    def __post_init__(self):
        if min(self.n_random, self.n_spray + 1, self.n_starts, self.max_alternations + 1) < 1:
            raise ValueError("acquisition counts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def ei_values(model: GpModel, points: Sequence[MixedPoint], best: float) -> np.ndarray:
    """EI for minimization: sigma * (z Phi(z) + phi(z)) with z = (best - mu)/sigma."""
    mu, var = predict_batch(model, points)
    sigma = np.sqrt(var)
    out = np.maximum(best - mu, 0.0)
    pos = sigma > 0
    z = (best - mu[pos]) / sigma[pos]
    out[pos] = sigma[pos] * (z * norm.cdf(z) + norm.pdf(z))
    return np.maximum(out, 0.0)


def expected_improvement(model: GpModel, x: MixedPoint, best: float) -> float:
    return float(ei_values(model, [x], best)[0])


def spray_points(
    space: SearchSpace, incumbent: MixedPoint, cfg: AcquireConfig, seed: int
) -> list[MixedPoint]:
    """Points near the incumbent: Gaussian jitter on the continuous part, a few
    random factor-neighbor moves on the discrete part."""
    rng = np.random.default_rng(seed)
    out = []
    widths = space.widths
    for _ in range(cfg.n_spray):
        cont = incumbent.cont_array + rng.normal(0.0, cfg.spray_cont_sigma * widths)
        cont = np.clip(cont, space.lower, space.upper)
        disc = list(incumbent.disc)
        for _ in range(cfg.spray_disc_moves):
            if space.n_factors == 0:
                break
            p = int(rng.integers(space.n_factors))
            nbrs = space.factors[p].neighbors(disc[p])
            if nbrs.size > 0:
                disc[p] = int(nbrs[rng.integers(nbrs.size)])
        out.append(MixedPoint.make(cont, disc))
    return out


def hill_climb_discrete(
    objective: Callable[[Sequence[MixedPoint]], np.ndarray],
    space: SearchSpace,
    x: MixedPoint,
) -> MixedPoint:
    """Greedy ascent over single-factor graph-neighbor moves.

    ``objective`` maps a batch of points to values (maximized).  Moves to the
    best strictly improving neighbor until a local maximum.
    """
    current = x
    current_val = float(objective([current])[0])
    while True:
        moves = []
        for p in range(space.n_factors):
            for v in space.factors[p].neighbors(current.disc[p]):
                disc = list(current.disc)
                disc[p] = int(v)
                moves.append(MixedPoint(current.cont, tuple(disc)))
        if not moves:
            return current
        vals = objective(moves)
        best_i = int(np.argmax(vals))
        if vals[best_i] <= current_val:
            return current
        current, current_val = moves[best_i], float(vals[best_i])


def continuous_step(
    objective: Callable[[Sequence[MixedPoint]], np.ndarray],
    space: SearchSpace,
    x: MixedPoint,
) -> MixedPoint:
    """One bounded quasi-Newton pass on the continuous coordinates.

    Discrete coordinates stay frozen; central-difference gradients with step
    1e-6 of the box width.  Returns ``x`` unchanged if no improvement is found.
    """
    if space.dim_cont == 0:
        return x
    disc = x.disc
    widths = np.maximum(space.widths, 1e-12)
    steps = 1e-6 * widths

    def neg_obj(c: np.ndarray) -> float:
        return -float(objective([MixedPoint.make(c, disc)])[0])

    def neg_grad(c: np.ndarray) -> np.ndarray:
        g = np.empty_like(c)
        for d in range(c.shape[0]):
            up = c.copy()
            dn = c.copy()
            up[d] = min(c[d] + steps[d], space.upper[d])
            dn[d] = max(c[d] - steps[d], space.lower[d])
            denom = up[d] - dn[d]
            g[d] = (neg_obj(up) - neg_obj(dn)) / denom if denom > 0 else 0.0
        return g

    bounds = list(zip(space.lower, space.upper))
    try:
        res = minimize(
            neg_obj,
            x.cont_array,
            jac=neg_grad,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": 1},
        )
    except Exception:  # line-search failure falls back to the input point
        return x
    cand = MixedPoint.make(np.clip(res.x, space.lower, space.upper), disc)
    if float(objective([cand])[0]) >= float(objective([x])[0]):
        return cand
    return x


def acquire_next(
    model: GpModel,
    space: SearchSpace,
    history_points: Sequence[MixedPoint],
    incumbent: MixedPoint,
    best: float,
    cfg: AcquireConfig,
    seed: int,
) -> MixedPoint:
    """Suggest the next evaluation point by EI maximization.

    Starts local searches from the top candidates by EI, alternating one hill
    climbing call with one continuous quasi-Newton pass until neither improves
    EI by more than ``cfg.tol``.  An exact duplicate of an evaluated point is
    replaced by the best non-duplicate candidate.
    """
    if not history_points:
        raise ValueError("acquisition requires a nonempty history")
    rng = np.random.default_rng(seed)
    candidates = space.sample_many(cfg.n_random, rng)
    candidates += spray_points(space, incumbent, cfg, seed=int(rng.integers(2**31)))

    def ei_batch(pts: Sequence[MixedPoint]) -> np.ndarray:
        return ei_values(model, pts, best)

    vals = ei_batch(candidates)
    order = np.argsort(-vals, kind="stable")
    starts = [candidates[i] for i in order[: cfg.n_starts]]

    results: list[tuple[float, int, MixedPoint]] = []
    for idx, start in enumerate(starts):
        x = start
        val = float(ei_batch([x])[0])
        for _ in range(cfg.max_alternations):
            x1 = hill_climb_discrete(ei_batch, space, x)
            x2 = continuous_step(ei_batch, space, x1)
            new_val = float(ei_batch([x2])[0])
            if new_val <= val + cfg.tol:
                x = x2 if new_val > val else x
                break
            x, val = x2, new_val
        val = float(ei_batch([x])[0])
        results.append((val, idx, x))

    results.sort(key=lambda t: (-t[0], t[1]))
    seen = set(history_points)
    for _, _, point in results:
        if point not in seen:
            return point
    # every optimized start duplicates history: fall back to best fresh candidate
    for i in order:
        if candidates[i] not in seen:
            return candidates[i]
    return results[0][2]
