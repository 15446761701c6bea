"""Numerical property checks for the kernel theory.

Each check samples random connected weighted graphs, hyperparameters and
points, measures a worst-case margin (minimum Gram eigenvalue, minimum kernel
entry, maximum monotonicity increase, ...) and compares it against its
tolerance.  Counterexample searches assert the *existence* of a violation and
carry the found witness; theorem checks carry a witness only on failure.
All checks are deterministic given their seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .graphs import FactorGraph, complete_graph, from_weighted_edges, spectral_transform
from .kernels import (
    FmFunction,
    Hyperparams,
    KernelSpec,
    _fm_values,
    default_family,
    fm_dif,
    fm_lap,
    fm_nn,
    gram,
    kernel_spec_from_name,
)
from .space import MixedPoint, SearchSpace

PSD_TOL = -1e-8
NONNEG_TOL = -1e-7
MONO_TOL = 1e-9
INVCOS_NEG = -1e-6
CONVEXITY_TOL = -1e-9

MOD_SPEC_NAMES = ("modlap", "moddif", "modfamily", "modnn")


@dataclass
class CheckReport:
    name: str
    trials: int
    worst_margin: float
    passed: bool
    gated: bool = True
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "trials": self.trials,
                "worst_margin": self.worst_margin,
                "passed": self.passed,
                "gated": self.gated,
                "witness": self.witness,
                "details": self.details,
            }
        )

    @staticmethod
    def from_json(line: str) -> "CheckReport":
        d = json.loads(line)
        return CheckReport(**d)


def random_connected_graph(rng: np.random.Generator, max_n: int = 12) -> FactorGraph:
    """Erdos-Renyi (p=0.5) with weights Uniform(0.1, 2], resampled until connected."""
    n = int(rng.integers(2, max_n + 1))
    while True:
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    edges.append((i, j, float(0.1 + 1.9 * rng.random())))
        if not edges:
            continue
        g = from_weighted_edges(n, edges)
        if g.connected:
            return g


def _graph_to_witness(g: FactorGraph) -> dict:
    edges = []
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if g.weights[i, j] > 0:
                edges.append([i, j, float(g.weights[i, j])])
    return {"n": g.n, "edges": edges}


def _graph_from_witness(w: dict) -> FactorGraph:
    return from_weighted_edges(w["n"], [tuple(e) for e in w["edges"]])


def _random_space(rng: np.random.Generator, max_n: int = 12) -> SearchSpace:
    d_c = int(rng.integers(1, 4))
    n_factors = int(rng.integers(1, 3))
    return SearchSpace(
        lower=-np.ones(d_c),
        upper=np.ones(d_c),
        factors=tuple(random_connected_graph(rng, max_n) for _ in range(n_factors)),
    )


def _random_hp(rng: np.random.Generator, space: SearchSpace) -> Hyperparams:
    return Hyperparams(
        theta=rng.uniform(0.2, 2.0, size=space.dim_cont),
        alpha=rng.uniform(0.0, 2.0, size=space.n_factors),
        beta=rng.uniform(0.1, 2.0, size=space.n_factors),
        sigma_f2=float(rng.uniform(0.5, 2.0)),
        sigma_n2=1e-2,
    )


def check_psd(
    spec_name: str, trials: int, seed: int, negate_fm: bool = False
) -> CheckReport:
    """Min Gram eigenvalue (normalized by trace/n) over random instances.

    ``negate_fm`` is a test hook that flips the sign of the kernel, forcing a
    failure with a witness.
    """
    if spec_name not in MOD_SPEC_NAMES:
        raise ValueError(f"unknown FM spec {spec_name!r}")
    rng = np.random.default_rng(seed)
    worst = math.inf
    witness = None
    for _ in range(max(trials, 1)):
        space = _random_space(rng)
        hp = _random_hp(rng, space)
        spec = kernel_spec_from_name(spec_name, space)
        m = int(rng.integers(2, 21))
        points = space.sample_many(m, rng)
        k = gram(spec, hp, points)
        if negate_fm:
            k = -k
        scale = max(np.trace(k) / m, 1e-300)
        margin = float(np.linalg.eigvalsh(k).min() / scale)
        if margin < worst:
            worst = margin
            if margin < PSD_TOL:
                witness = {
                    "graphs": [_graph_to_witness(g) for g in space.factors],
                    "hp": {
                        "theta": list(hp.theta),
                        "alpha": list(hp.alpha),
                        "beta": list(hp.beta),
                        "sigma_f2": hp.sigma_f2,
                    },
                    "points": [
                        {"cont": list(p.cont), "disc": list(p.disc)} for p in points
                    ],
                }
    passed = worst >= PSD_TOL
    return CheckReport(
        name=f"psd[{spec_name}]",
        trials=trials,
        worst_margin=worst,
        passed=passed,
        witness=None if passed else witness,
    )


def spectral_min_entry(g: FactorGraph, h: Callable[[np.ndarray], np.ndarray]) -> float:
    """Min entry of the spectral transform; rejects disconnected graphs
    (the nonnegativity theorem premise requires connectivity)."""
    if not g.connected:
        raise ValueError("nonnegativity check requires a connected graph")
    return float(spectral_transform(g, h).min())


def _spectrum_fn(name: str, beta: float) -> Callable[[np.ndarray], np.ndarray]:
    if name == "lap":
        return lambda lam: 1.0 / (1.0 + beta * lam)
    if name == "dif":
        return lambda lam: np.exp(-beta * lam)
    raise ValueError(f"unknown spectrum {name!r}")


def check_nonnegativity(spectrum: str, trials: int, seed: int) -> CheckReport:
    """Min kernel entry over random connected weighted graphs for a
    nonnegative, strictly decreasing, convex spectrum function."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    witness = None
    for _ in range(max(trials, 1)):
        g = random_connected_graph(rng)
        beta = float(rng.uniform(0.1, 2.0))
        entry = spectral_min_entry(g, _spectrum_fn(spectrum, beta))
        if entry < worst:
            worst = entry
            if entry < NONNEG_TOL:
                witness = {"graph": _graph_to_witness(g), "beta": beta}
    passed = worst >= NONNEG_TOL
    return CheckReport(
        name=f"nonnegativity[{spectrum}]",
        trials=trials,
        worst_margin=worst,
        passed=passed,
        witness=None if passed else witness,
    )


def _inverse_cosine_spectrum(g: FactorGraph) -> Callable[[np.ndarray], np.ndarray]:
    # lam rescaled to [0, 2] as in the normalized-Laplacian formulation; the
    # exact rescaling does not matter for exhibiting negativity.
    lam_max = max(float(g.eigvals[-1]), 1e-12)
    return lambda lam: np.cos((2.0 * lam / lam_max) * math.pi / 4.0)


def find_negative_inverse_cosine(
    trials: int, seed: int, spectrum: Optional[str] = None
) -> CheckReport:
    """Search for a graph where the inverse-cosine spectrum yields a negative
    entry; passes iff a witness is FOUND.  The concave cosine violates the
    convexity premise, so negativity is expected to occur.

    With ``spectrum`` set to 'lap' or 'dif' the same search runs against a
    convex spectrum instead, where no witness should appear.
    """
    rng = np.random.default_rng(seed)
    worst = math.inf
    witness = None
    for _ in range(max(trials, 1)):
        g = random_connected_graph(rng)
        if spectrum is None:
            h = _inverse_cosine_spectrum(g)
            beta = None
        else:
            beta = float(rng.uniform(0.1, 2.0))
            h = _spectrum_fn(spectrum, beta)
        entry = spectral_min_entry(g, h)
        if entry < worst:
            worst = entry
            if entry < INVCOS_NEG:
                witness = {"graph": _graph_to_witness(g), "min_entry": entry,
                           "spectrum": spectrum or "invcos", "beta": beta}
    found = worst < INVCOS_NEG
    return CheckReport(
        name=f"negative_entry_search[{spectrum or 'invcos'}]",
        trials=trials,
        worst_margin=worst,
        passed=found if spectrum is None else not found,
        witness=witness,
    )


def reevaluate_witness(witness: dict) -> float:
    """Recompute the min spectral-transform entry of a serialized search witness."""
    g = _graph_from_witness(witness["graph"])
    if witness.get("spectrum", "invcos") == "invcos":
        h = _inverse_cosine_spectrum(g)
    else:
        h = _spectrum_fn(witness["spectrum"], witness["beta"])
    return float(spectral_transform(g, h).min())


def _factor_values_on_grid(
    fm: FmFunction, g: FactorGraph, v: int, v2: int,
    dist2_grid: np.ndarray, alpha: float, beta: float,
) -> np.ndarray:
    """Single-factor FM kernel values along a distance grid for one vertex pair."""
    fv = _fm_values(fm, g.eigvals, dist2_grid, alpha, beta)
    basis = g.eigvecs[v] * g.eigvecs[v2]
    return fv @ basis


def check_similarity_monotonicity(spec_name: str, trials: int, seed: int) -> CheckReport:
    """Kernel value along an increasing 50-point distance grid must never
    increase (ModLap/ModFamily); for ModDif the report is informational."""
    fm = {"modlap": fm_lap(), "moddif": fm_dif(), "modfamily": default_family()}[spec_name]
    rng = np.random.default_rng(seed)
    worst_increase = -math.inf
    witness = None
    grid = np.linspace(0.0, 3.0, 50) ** 2  # squared distances, increasing
    for _ in range(max(trials, 1)):
        g = random_connected_graph(rng)
        alpha = float(rng.uniform(0.1, 2.0))
        beta = float(rng.uniform(0.1, 2.0))
        v, v2 = rng.integers(g.n), rng.integers(g.n)
        vals = _factor_values_on_grid(fm, g, int(v), int(v2), grid, alpha, beta)
        inc = float(np.max(np.diff(vals)))
        if inc > worst_increase:
            worst_increase = inc
            if inc > MONO_TOL:
                witness = {
                    "graph": _graph_to_witness(g),
                    "alpha": alpha,
                    "beta": beta,
                    "pair": [int(v), int(v2)],
                }
    gated = spec_name in ("modlap", "modfamily")
    passed = worst_increase <= MONO_TOL
    return CheckReport(
        name=f"similarity_monotonicity[{spec_name}]",
        trials=trials,
        worst_margin=worst_increase,
        passed=passed if gated else True,
        gated=gated,
        witness=witness if (gated and not passed) or (not gated and witness) else None,
        details={} if gated else {"violation_found": not passed},
    )


def find_moddif_violation(trials: int, seed: int) -> CheckReport:
    """Search for a similarity-measure violation of the diffusion-style
    modulating function; informational, not pass/fail gated.

    Complete-graph instances are logged as a separate stratum where the
    violation has a closed form: the off-diagonal factor value
    (1 - exp(-(1 + alpha d^2) beta n)) / n increases with the distance, so the
    stratum's worst increase should itself exceed the tolerance.
    """
    fm = fm_dif()
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 3.0, 50) ** 2
    worst = -math.inf
    witness = None
    complete_worst = -math.inf
    for t in range(max(trials, 1)):
        on_complete = t % 4 == 0
        if on_complete:
            g = complete_graph(int(rng.integers(2, 13)))
        else:
            g = random_connected_graph(rng)
        alpha = float(rng.uniform(0.1, 2.0))
        beta = float(rng.uniform(0.1, 2.0))
        v, v2 = int(rng.integers(g.n)), int(rng.integers(g.n))
        vals = _factor_values_on_grid(fm, g, v, v2, grid, alpha, beta)
        inc = float(np.max(np.diff(vals)))
        if on_complete:
            complete_worst = max(complete_worst, inc)
            continue
        if inc > worst:
            worst = inc
            if inc > MONO_TOL:
                i = int(np.argmax(np.diff(vals)))
                witness = {
                    "graph": _graph_to_witness(g),
                    "alpha": alpha,
                    "beta": beta,
                    "pair": [v, v2],
                    "dist2_pair": [float(grid[i]), float(grid[i + 1])],
                    "increase": inc,
                }
    return CheckReport(
        name="moddif_violation_search",
        trials=trials,
        worst_margin=worst,
        passed=True,
        gated=False,
        witness=witness,
        details={
            "violation_found": worst > MONO_TOL,
            "complete_graph_worst_increase": complete_worst,
        },
    )


def check_fm_properties(variant: str, trials: int, seed: int) -> CheckReport:
    """Grid checks of the modulating-function properties.

    FM-P1: positive and nonincreasing in the frequency at fixed modulation
    input.  FM-P3: h(lam) = f(lam, t1) - f(lam, t2) for t1 < t2 positive,
    decreasing, convex (second differences).  For the nn variant the premise is
    reversed (t1 > t2, larger kernel value means more similar).  The dif
    variant passes FM-P1 only; its convexity violations are reported ungated.
    """
    fm = {
        "lap": fm_lap(),
        "dif": fm_dif(),
        "family": default_family(),
        "nn": fm_nn(np.eye(2)),
    }[variant]
    rng = np.random.default_rng(seed)
    lam_grid = np.linspace(0.0, 12.0, 64)
    dlam = lam_grid[1] - lam_grid[0]
    p1_worst = math.inf          # min of (positivity margin, -max increase in lam)
    h_pos_worst = math.inf
    h_dec_worst = math.inf       # max increase of h in lam (want <= tol)
    h_convex_worst = math.inf    # min second difference (want >= -tol)
    for _ in range(max(trials, 1)):
        alpha = float(rng.uniform(0.1, 2.0))
        beta = float(rng.uniform(0.1, 2.0))
        if variant == "nn":
            t2, t1 = sorted(rng.uniform(-1.0, 1.0, size=2))  # t1 > t2
        else:
            t1, t2 = sorted(rng.uniform(0.0, 9.0, size=2))   # squared distances
        f1 = _fm_values(fm, lam_grid, np.array(t1), alpha, beta)
        f2 = _fm_values(fm, lam_grid, np.array(t2), alpha, beta)
        for f in (f1, f2):
            p1_worst = min(p1_worst, float(f.min()), float(-np.max(np.diff(f))))
        h = f1 - f2
        h_pos_worst = min(h_pos_worst, float(h.min()))
        h_dec_worst = min(h_dec_worst, float(-np.max(np.diff(h))))
        second = np.diff(h, 2) / dlam**2
        h_convex_worst = min(h_convex_worst, float(second.min()))
    p1_pass = p1_worst >= -1e-12
    p3_pass = (
        h_pos_worst >= -1e-12
        and h_dec_worst >= -1e-12
        and h_convex_worst >= CONVEXITY_TOL
    )
    gated_p3 = variant != "dif"
    passed = p1_pass and (p3_pass or not gated_p3)
    return CheckReport(
        name=f"fm_properties[{variant}]",
        trials=trials,
        worst_margin=min(p1_worst, h_convex_worst if gated_p3 else p1_worst),
        passed=passed,
        witness=None if passed else {"variant": variant},
        details={
            "p1_pass": p1_pass,
            "p3_pass": p3_pass,
            "p3_gated": gated_p3,
            "h_positive_min": h_pos_worst,
            "h_decrease_margin": h_dec_worst,
            "h_second_difference_min": h_convex_worst,
        },
    )


def run_default_suite(trials_psd: int = 200, trials_nonneg: int = 500,
                      trials_mono: int = 300, seed: int = 0,
                      negate_fm: bool = False) -> list[CheckReport]:
    """The default verification suite used by the CLI."""
    reports = []
    for i, name in enumerate(MOD_SPEC_NAMES):
        reports.append(check_psd(name, trials_psd, seed + i, negate_fm=negate_fm))
    reports.append(check_nonnegativity("lap", trials_nonneg, seed + 10))
    reports.append(check_nonnegativity("dif", trials_nonneg, seed + 11))
    reports.append(find_negative_inverse_cosine(2000, seed + 12))
    reports.append(check_similarity_monotonicity("modlap", trials_mono, seed + 13))
    reports.append(check_similarity_monotonicity("modfamily", trials_mono, seed + 14))
    reports.append(check_similarity_monotonicity("moddif", trials_mono, seed + 15))
    reports.append(find_moddif_violation(trials_mono, seed + 16))
    for i, variant in enumerate(("lap", "dif", "family", "nn")):
        reports.append(check_fm_properties(variant, 64, seed + 20 + i))
    return reports
